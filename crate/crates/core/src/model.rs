//! Annealing Hamiltonian family and reverse-anneal schedules.
//!
//! `H(k) = (1−k)·H_D + k·(k·H_L + H_P)` with
//! `H_P = −J Σ_{i<j} σ^z_i σ^z_j`, `H_L = (h/2) Σ σ^z_i`, `H_D = −Γ Σ σ^x_i`.
//! Every term carries the overall `energy_scale` factor; time is in μs and
//! energies are angular frequencies in rad/μs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{
    CMatrix, HermitianOperator, OperatorError, SpinConfiguration, C64, MAX_QUBITS,
};

/// Slack allowed when checking schedule times against the total duration.
const TIME_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("annealing parameter k = {0} is outside [0, 1]")]
    KOutOfRange(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("time {t} μs is outside the schedule [0, {total}]")]
    TimeOutOfRange { t: f64, total: f64 },
    #[error("first excited configuration is not unique ({multiplicity} configurations at E = {energy})")]
    DegenerateExcitedState { energy: f64, multiplicity: usize },
    #[error("ground configuration is degenerate ({multiplicity} configurations at E = {energy})")]
    DegenerateGroundState { energy: f64, multiplicity: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Dimensionless couplings of the annealing Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n_qubits: usize,
    /// `J` in `H_P = −J Σ σσ`; positive is ferromagnetic.
    pub coupling: f64,
    /// `h` in `H_L = (h/2) Σ σ^z`.
    pub longitudinal: f64,
    /// `Γ` in `H_D = −Γ Σ σ^x`.
    pub transverse: f64,
    #[serde(default = "one")]
    pub energy_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    /// Four fully connected ferromagnetic qubits, `J = h = Γ = 1`.
    pub fn fully_connected() -> Self {
        Self {
            n_qubits: 4,
            coupling: 1.0,
            longitudinal: 1.0,
            transverse: 1.0,
            energy_scale: 1.0,
        }
    }

    /// One qubit, `J = 0`, `h = Γ = 1`.
    pub fn single_qubit() -> Self {
        Self {
            n_qubits: 1,
            coupling: 0.0,
            ..Self::fully_connected()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(ModelError::InvalidParams(format!(
                "n_qubits = {} must be in 1..={MAX_QUBITS}",
                self.n_qubits
            )));
        }
        let finite = [
            self.coupling,
            self.longitudinal,
            self.transverse,
            self.energy_scale,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(ModelError::InvalidParams("non-finite coupling".into()));
        }
        if self.energy_scale <= 0.0 {
            return Err(ModelError::InvalidParams(format!(
                "energy_scale = {} must be positive",
                self.energy_scale
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }
}

/// Spins (±1) of computational-basis index `idx`, qubit 1 first.
fn spins_of(idx: usize, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |q| if (idx >> (n - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 })
}

fn problem_diagonal(params: &ModelParams) -> Vec<f64> {
    let n = params.n_qubits;
    (0..params.dim())
        .map(|idx| {
            let s: Vec<f64> = spins_of(idx, n).collect();
            let mut acc = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    acc += s[i] * s[j];
                }
            }
            -params.coupling * acc * params.energy_scale
        })
        .collect()
}

fn longitudinal_diagonal(params: &ModelParams) -> Vec<f64> {
    (0..params.dim())
        .map(|idx| {
            let sz: f64 = spins_of(idx, params.n_qubits).sum();
            0.5 * params.longitudinal * sz * params.energy_scale
        })
        .collect()
}

pub fn problem_hamiltonian(params: &ModelParams) -> Result<HermitianOperator> {
    params.validate()?;
    Ok(HermitianOperator::from_diagonal(&problem_diagonal(params))?)
}

pub fn longitudinal_hamiltonian(params: &ModelParams) -> Result<HermitianOperator> {
    params.validate()?;
    Ok(HermitianOperator::from_diagonal(&longitudinal_diagonal(
        params,
    ))?)
}

pub fn driver_hamiltonian(params: &ModelParams) -> Result<HermitianOperator> {
    params.validate()?;
    let n = params.n_qubits;
    let d = params.dim();
    let amp = C64::new(-params.transverse * params.energy_scale, 0.0);
    let mut m = CMatrix::zeros(d, d);
    for idx in 0..d {
        for q in 0..n {
            m[(idx ^ (1 << q), idx)] += amp;
        }
    }
    Ok(HermitianOperator::new(m)?)
}

/// The three fixed terms, precomputed for repeated evaluation of `H(k)`.
#[derive(Debug, Clone)]
pub struct HamiltonianTerms {
    params: ModelParams,
    driver: CMatrix,
    longitudinal: CMatrix,
    problem: CMatrix,
}

impl HamiltonianTerms {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(Self {
            params: *params,
            driver: driver_hamiltonian(params)?.into_matrix(),
            longitudinal: longitudinal_hamiltonian(params)?.into_matrix(),
            problem: problem_hamiltonian(params)?.into_matrix(),
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.driver.nrows()
    }

    /// Writes `H(k)` into `out` without range checks.
    pub(crate) fn fill(&self, k: f64, out: &mut CMatrix) {
        let a = C64::new(1.0 - k, 0.0);
        let b = C64::new(k * k, 0.0);
        let g = C64::new(k, 0.0);
        let terms = self
            .driver
            .iter()
            .zip(self.longitudinal.iter())
            .zip(self.problem.iter());
        for (o, ((d, l), p)) in out.iter_mut().zip(terms) {
            *o = a * d + b * l + g * p;
        }
    }

    pub(crate) fn matrix_at(&self, k: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        self.fill(k, &mut out);
        out
    }

    pub fn at(&self, k: f64) -> Result<HermitianOperator> {
        check_k(k)?;
        Ok(HermitianOperator::from_parts_unchecked(
            self.params.n_qubits,
            self.matrix_at(k),
        ))
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&k) {
        return Err(ModelError::KOutOfRange(k));
    }
    Ok(())
}

/// `H(k) = (1−k)·H_D + k·(k·H_L + H_P)`.
pub fn total_hamiltonian(k: f64, params: &ModelParams) -> Result<HermitianOperator> {
    check_k(k)?;
    HamiltonianTerms::new(params)?.at(k)
}

/// A vertex `(t, k)` of a piecewise-linear annealing path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub t: f64,
    pub k: f64,
}

impl SchedulePoint {
    pub fn new(t: f64, k: f64) -> Result<Self> {
        check_k(k)?;
        if !t.is_finite() || t < 0.0 {
            return Err(ModelError::InvalidSchedule(format!("time {t} must be finite and ≥ 0")));
        }
        Ok(Self { t, k })
    }
}

/// Reverse-anneal protocol: ramp `k: 1 → h_d` over `t1`, hold for `t2`,
/// ramp back to 1 over `t3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RqaSchedule {
    #[serde(rename = "t1_us", default = "one")]
    pub t1: f64,
    #[serde(rename = "t2_us", default)]
    pub t2: f64,
    #[serde(rename = "t3_us", default = "one")]
    pub t3: f64,
    pub h_d: f64,
}

impl RqaSchedule {
    pub fn new(t1: f64, t2: f64, t3: f64, h_d: f64) -> Result<Self> {
        let s = Self { t1, t2, t3, h_d };
        s.validate()?;
        Ok(s)
    }

    /// `t1 = t3 = 1 μs`.
    pub fn with_defaults(t2: f64, h_d: f64) -> Result<Self> {
        Self::new(1.0, t2, 1.0, h_d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite();
        if !(ok(self.t1) && self.t1 > 0.0) || !(ok(self.t3) && self.t3 > 0.0) {
            return Err(ModelError::InvalidSchedule(format!(
                "ramp times must be positive (t1 = {}, t3 = {})",
                self.t1, self.t3
            )));
        }
        if !(ok(self.t2) && self.t2 >= 0.0) {
            return Err(ModelError::InvalidSchedule(format!("t2 = {} must be ≥ 0", self.t2)));
        }
        if !(self.h_d > 0.0 && self.h_d <= 1.0) {
            return Err(ModelError::InvalidSchedule(format!("h_d = {} must be in (0, 1]", self.h_d)));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }

    /// Path vertices; the hold collapses to a single vertex when `t2 = 0`.
    pub fn vertices(&self) -> Vec<SchedulePoint> {
        let mut v = vec![
            SchedulePoint { t: 0.0, k: 1.0 },
            SchedulePoint { t: self.t1, k: self.h_d },
        ];
        if self.t2 > 0.0 {
            v.push(SchedulePoint {
                t: self.t1 + self.t2,
                k: self.h_d,
            });
        }
        v.push(SchedulePoint {
            t: self.t1 + self.t2 + self.t3,
            k: 1.0,
        });
        v
    }

    pub fn path(&self) -> PiecewiseSchedule {
        PiecewiseSchedule {
            points: self.vertices(),
        }
    }
}

/// `k(t)` for the reverse-anneal protocol.
pub fn schedule_k(t: f64, schedule: &RqaSchedule) -> Result<f64> {
    schedule.validate()?;
    let total = schedule.total_duration();
    if !(t >= -TIME_SLACK && t <= total * (1.0 + TIME_SLACK) + TIME_SLACK) {
        return Err(ModelError::TimeOutOfRange { t, total });
    }
    let t = t.clamp(0.0, total);
    let RqaSchedule { t1, t2, t3, h_d } = *schedule;
    let k = if t <= t1 {
        1.0 - (1.0 - h_d) * (t / t1)
    } else if t <= t1 + t2 {
        h_d
    } else {
        h_d + (1.0 - h_d) * ((t - t1 - t2) / t3)
    };
    Ok(k.clamp(0.0, 1.0))
}

/// One linear piece of an annealing path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub k_start: f64,
    pub k_end: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// Constant-`k` segment.
    pub fn is_hold(&self) -> bool {
        self.k_start == self.k_end
    }

    pub fn k_at(&self, t: f64) -> f64 {
        let frac = (t - self.t_start) / self.duration();
        self.k_start + (self.k_end - self.k_start) * frac
    }
}

/// General piecewise-linear path through strictly time-ordered vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSchedule {
    points: Vec<SchedulePoint>,
}

impl PiecewiseSchedule {
    pub fn new(points: Vec<SchedulePoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(ModelError::InvalidSchedule("need at least two vertices".into()));
        }
        for p in &points {
            SchedulePoint::new(p.t, p.k)?;
        }
        if points[0].t != 0.0 {
            return Err(ModelError::InvalidSchedule("path must start at t = 0".into()));
        }
        if points.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(ModelError::InvalidSchedule(
                "vertex times must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[SchedulePoint] {
        &self.points
    }

    pub fn total_duration(&self) -> f64 {
        self.points.last().map(|p| p.t).unwrap_or(0.0)
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.points
            .windows(2)
            .map(|w| Segment {
                t_start: w[0].t,
                t_end: w[1].t,
                k_start: w[0].k,
                k_end: w[1].k,
            })
            .collect()
    }

    pub fn k_at(&self, t: f64) -> Result<f64> {
        let total = self.total_duration();
        if !(t >= 0.0 && t <= total) {
            return Err(ModelError::TimeOutOfRange { t, total });
        }
        let seg = self
            .segments()
            .into_iter()
            .find(|s| t <= s.t_end)
            .expect("t within path");
        Ok(seg.k_at(t).clamp(0.0, 1.0))
    }
}

/// Unique first excited configuration of the classical Hamiltonian `H_P + H_L`.
pub fn initial_excited_configuration(params: &ModelParams) -> Result<SpinConfiguration> {
    params.validate()?;
    let p = problem_diagonal(params);
    let l = longitudinal_diagonal(params);
    let energies: Vec<f64> = p.iter().zip(&l).map(|(a, b)| a + b).collect();
    let tol = 1e-9 * params.energy_scale.max(1.0);
    let mut sorted = energies.clone();
    sorted.sort_by(f64::total_cmp);
    let ground = sorted[0];
    let ground_mult = sorted.iter().filter(|&&e| (e - ground).abs() <= tol).count();
    if ground_mult > 1 {
        return Err(ModelError::DegenerateGroundState {
            energy: ground,
            multiplicity: ground_mult,
        });
    }
    let excited = *sorted
        .iter()
        .find(|&&e| e - ground > tol)
        .ok_or(ModelError::DegenerateGroundState {
            energy: ground,
            multiplicity: sorted.len(),
        })?;
    let members: Vec<usize> = energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| (e - excited).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    if members.len() > 1 {
        return Err(ModelError::DegenerateExcitedState {
            energy: excited,
            multiplicity: members.len(),
        });
    }
    Ok(SpinConfiguration::from_index(members[0], params.n_qubits)?)
}
