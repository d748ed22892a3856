//! Closed and open-system propagation along piecewise-linear annealing paths.
//!
//! Ramps are integrated with fixed-step RK4. Constant-`k` holds can instead be
//! propagated exactly: unitary phases for closed runs, the classical rate
//! equation plus decaying coherences for the eigenbasis generator, and the
//! Liouvillian exponential for lab-frame noise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{adj_mul, conjugate_diagonal, mul, mul_adj};
use crate::model::{HamiltonianTerms, ModelError, ModelParams, PiecewiseSchedule, RqaSchedule, Segment};
use crate::noise::{coupling_operators, davies_rates_with, NoiseError, NoiseMode, NoiseSpec};
use crate::operators::{
    eigensystem_of_matrix, hermiticity_error, CMatrix, CVector, DensityMatrix, EigenSystem,
    HermitianOperator, OperatorError, StateVector, C64,
};

/// `max‖H‖·dt` targeted by the default step size.
pub const DEFAULT_STEP_BUDGET: f64 = 0.05;
pub const NORM_DRIFT_TOL: f64 = 1e-6;
pub const TRACE_DRIFT_TOL: f64 = 1e-6;
pub const POSITIVITY_TOL: f64 = 1e-6;
pub const HERMITICITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("state norm drifted by {drift:e} at t = {t} μs")]
    NormDrift { t: f64, drift: f64 },
    #[error("trace drifted by {drift:e} at t = {t} μs")]
    TraceDrift { t: f64, drift: f64 },
    #[error("density matrix lost positivity at t = {t} μs (min eigenvalue {min_eigenvalue:e})")]
    Positivity { t: f64, min_eigenvalue: f64 },
    #[error("density matrix lost Hermiticity at t = {t} μs (error {error:e})")]
    Hermiticity { t: f64, error: f64 },
    #[error("state dimension {got} does not match the Hamiltonian dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T, E = DynamicsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    /// Step size in μs; `None` derives it from the operator-norm bound.
    pub dt: Option<f64>,
    pub method: Method,
    /// Record every `record_stride`-th step (segment ends are always kept).
    pub record_stride: usize,
    /// Propagate constant-`k` segments exactly instead of stepping.
    pub hold_fast_path: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: None,
            method: Method::Rk4,
            record_stride: 1,
            hold_fast_path: true,
        }
    }
}

impl EvolutionConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt: Some(dt),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(DynamicsError::InvalidConfig(format!("dt = {dt} must be > 0")));
            }
        }
        if self.record_stride == 0 {
            return Err(DynamicsError::InvalidConfig("record stride must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Triangle-inequality bound on `max_k ‖H(k)‖`.
pub fn operator_norm_bound(params: &ModelParams) -> f64 {
    let n = params.n_qubits as f64;
    params.energy_scale.abs()
        * (params.transverse.abs() * n
            + params.coupling.abs() * n * (n - 1.0) / 2.0
            + params.longitudinal.abs() * n / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &S)> {
        Some((*self.times.last()?, self.states.last()?))
    }

    pub fn into_final(self) -> Option<S> {
        self.states.into_iter().last()
    }
}

#[derive(Debug, Clone)]
enum Source {
    Annealing(HamiltonianTerms),
    Fixed(CMatrix),
}

#[derive(Debug, Clone)]
enum Dissipation {
    Closed,
    Lab { jumps: Vec<CMatrix>, anti: CMatrix },
    Davies { spec: NoiseSpec, couplings: Vec<CMatrix> },
}

/// Dissipative part of the generator, frozen over one integration step.
struct Dissipator {
    /// `−½ Σ c†c`
    half_anti: Option<CMatrix>,
    eigen: Option<(EigenSystem, DMatrix<f64>)>,
}

/// Reusable propagator for one Hamiltonian family and noise model.
#[derive(Debug, Clone)]
pub struct Evolver {
    source: Source,
    n_qubits: usize,
    dissipation: Dissipation,
    dt: f64,
    cfg: EvolutionConfig,
}

const I: C64 = C64::new(0.0, 1.0);

fn cf(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl Evolver {
    pub fn new(params: &ModelParams, noise: &NoiseSpec, cfg: &EvolutionConfig) -> Result<Self> {
        params.validate()?;
        let bound = operator_norm_bound(params);
        Self::build(
            Source::Annealing(HamiltonianTerms::new(params)?),
            params.n_qubits,
            bound,
            noise,
            cfg,
        )
    }

    /// Propagator for a time-independent Hamiltonian; path `k` values are ignored.
    pub fn with_hamiltonian(h: &HermitianOperator, noise: &NoiseSpec, cfg: &EvolutionConfig) -> Result<Self> {
        // Frobenius norm bounds the spectral norm
        let bound = h.matrix().norm();
        Self::build(Source::Fixed(h.matrix().clone()), h.n_qubits(), bound, noise, cfg)
    }

    fn build(source: Source, n_qubits: usize, h_bound: f64, noise: &NoiseSpec, cfg: &EvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        noise.validate()?;
        let n = n_qubits as f64;
        let (dissipation, noise_bound) = if noise.is_closed() {
            (Dissipation::Closed, 0.0)
        } else {
            match noise.mode {
                NoiseMode::LabFrame => {
                    let amp = cf(noise.rate.sqrt());
                    let jumps: Vec<CMatrix> = coupling_operators(n_qubits, noise.axis)?
                        .into_iter()
                        .map(|m| m * amp)
                        .collect();
                    let d = 1usize << n_qubits;
                    let anti = jumps
                        .iter()
                        .fold(CMatrix::zeros(d, d), |acc, c| acc + c.adjoint() * c);
                    (Dissipation::Lab { jumps, anti }, noise.rate * n)
                }
                NoiseMode::EigenbasisDavies => {
                    let sd = &noise.spectral_density;
                    let s_max = sd.ohmic * 2.0 * h_bound + sd.flat + sd.tls_amplitude;
                    (
                        Dissipation::Davies {
                            spec: *noise,
                            couplings: coupling_operators(n_qubits, noise.axis)?,
                        },
                        noise.rate * n * s_max,
                    )
                }
                NoiseMode::None => unreachable!("closed noise handled above"),
            }
        };
        let dt = match cfg.dt {
            Some(dt) => dt,
            None => {
                let total = h_bound + noise_bound;
                if total > 0.0 {
                    DEFAULT_STEP_BUDGET / total
                } else {
                    f64::INFINITY
                }
            }
        };
        Ok(Self {
            source,
            n_qubits,
            dissipation,
            dt,
            cfg: *cfg,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn hamiltonian(&self, k: f64) -> CMatrix {
        match &self.source {
            Source::Annealing(terms) => terms.matrix_at(k.clamp(0.0, 1.0)),
            Source::Fixed(m) => m.clone(),
        }
    }

    fn dissipator(&self, k: f64) -> Result<Dissipator> {
        Ok(match &self.dissipation {
            Dissipation::Closed => Dissipator {
                half_anti: None,
                eigen: None,
            },
            Dissipation::Lab { anti, .. } => Dissipator {
                half_anti: Some(anti * cf(-0.5)),
                eigen: None,
            },
            Dissipation::Davies { spec, couplings } => {
                let sys = eigensystem_of_matrix(&self.hamiltonian(k), self.n_qubits)?;
                let rates = davies_rates_with(&sys, couplings, spec)?;
                let escape = (0..rates.dim()).map(|n| -0.5 * rates.escape_rate(n));
                Dissipator {
                    half_anti: Some(conjugate_diagonal(sys.vectors(), escape)),
                    eigen: Some((sys, rates.rates().clone())),
                }
            }
        })
    }

    /// `−iH(k) − ½K`.
    fn drift(&self, k: f64, diss: &Dissipator) -> CMatrix {
        let mut m = self.hamiltonian(k) * (-I);
        if let Some(half) = &diss.half_anti {
            m += half;
        }
        m
    }

    fn density_rhs(&self, drift: &CMatrix, diss: &Dissipator, rho: &CMatrix) -> CMatrix {
        let m_rho = mul(drift, rho);
        let mut out = m_rho.adjoint();
        out += &m_rho;
        match (&self.dissipation, &diss.eigen) {
            (Dissipation::Lab { jumps, .. }, _) => {
                for c in jumps {
                    out += mul_adj(&mul(c, rho), c);
                }
            }
            (Dissipation::Davies { .. }, Some((sys, rates))) => {
                let v = sys.vectors();
                let w = mul(rho, v);
                let d = v.nrows();
                let pops = DVector::<f64>::from_iterator(
                    d,
                    (0..d).map(|n| v.column(n).dotc(&w.column(n)).re),
                );
                let gain = rates.tr_mul(&pops);
                out += conjugate_diagonal(v, gain.iter().copied());
            }
            _ => {}
        }
        out
    }

    fn steps_for(&self, seg: &Segment) -> (usize, f64) {
        let dur = seg.duration();
        let n = ((dur / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, dur / n as f64)
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    // ---- closed systems ----

    fn closed_segment(&self, psi: CVector, seg: &Segment, rec: &mut Recorder<CVector>) -> Result<CVector> {
        if seg.duration() <= 0.0 {
            return Ok(psi);
        }
        let hold = seg.is_hold() || matches!(self.source, Source::Fixed(_));
        if hold && self.cfg.hold_fast_path {
            let h = self.hamiltonian(seg.k_start);
            let sys = eigensystem_of_matrix(&h, self.n_qubits)?;
            let out = exact_unitary(&sys, &psi, seg.duration());
            rec.push_end(seg.t_end, &out);
            return Ok(out);
        }
        let (n, dt) = self.steps_for(seg);
        let fixed = hold.then(|| self.hamiltonian(seg.k_start) * (-I));
        let gen = |t: f64| -> CMatrix {
            match &fixed {
                Some(m) => m.clone(),
                None => self.hamiltonian(seg.k_at(t)) * (-I),
            }
        };
        let mut psi = psi;
        let mut g0 = gen(seg.t_start);
        for i in 0..n {
            let t = seg.t_start + i as f64 * dt;
            let t_next = if i + 1 == n { seg.t_end } else { seg.t_start + (i + 1) as f64 * dt };
            let gm = gen(t + 0.5 * dt);
            let g1 = gen(t_next);
            let k1 = &g0 * &psi;
            let k2 = &gm * (&psi + &k1 * cf(0.5 * dt));
            let k3 = &gm * (&psi + &k2 * cf(0.5 * dt));
            let k4 = &g1 * (&psi + &k3 * cf(dt));
            psi += (k1 + (k2 + k3) * cf(2.0) + k4) * cf(dt / 6.0);
            g0 = g1;
            rec.push_step(i + 1, n, t_next, &psi);
        }
        let drift = (psi.norm() - 1.0).abs();
        if drift > NORM_DRIFT_TOL {
            return Err(DynamicsError::NormDrift { t: seg.t_end, drift });
        }
        Ok(psi)
    }

    /// Unitary evolution along `path`.
    pub fn run_closed(&self, psi0: &StateVector, path: &PiecewiseSchedule) -> Result<Trajectory<StateVector>> {
        self.check_dim(psi0.dim())?;
        let mut rec = Recorder::new(self.cfg.record_stride, true);
        rec.push_end(0.0, psi0.amplitudes());
        let mut psi = psi0.amplitudes().clone();
        for seg in path.segments() {
            psi = self.closed_segment(psi, &seg, &mut rec)?;
        }
        let n = self.n_qubits;
        Ok(rec.finish(|a| StateVector::from_parts_unchecked(n, a)))
    }

    /// Final state of a unitary evolution over a single segment.
    pub fn propagate_state(&self, psi: &StateVector, seg: &Segment) -> Result<StateVector> {
        self.check_dim(psi.dim())?;
        let mut rec = Recorder::new(1, false);
        let out = self.closed_segment(psi.amplitudes().clone(), seg, &mut rec)?;
        Ok(StateVector::from_parts_unchecked(self.n_qubits, out))
    }

    // ---- open systems ----

    fn density_segment(&self, rho: CMatrix, seg: &Segment, rec: &mut Recorder<CMatrix>) -> Result<CMatrix> {
        if seg.duration() <= 0.0 {
            return Ok(rho);
        }
        let hold = seg.is_hold() || matches!(self.source, Source::Fixed(_));
        if hold && self.cfg.hold_fast_path {
            let out = self.exact_hold(&rho, seg.k_start, seg.duration())?;
            rec.push_end(seg.t_end, &out);
            self.check_density(&out, seg.t_end, true)?;
            return Ok(out);
        }
        let (n, dt) = self.steps_for(seg);
        let mut rho = rho;
        if hold {
            let diss = self.dissipator(seg.k_start)?;
            let m = self.drift(seg.k_start, &diss);
            for i in 0..n {
                let t_next = if i + 1 == n { seg.t_end } else { seg.t_start + (i + 1) as f64 * dt };
                let k1 = self.density_rhs(&m, &diss, &rho);
                let k2 = self.density_rhs(&m, &diss, &(&rho + &k1 * cf(0.5 * dt)));
                let k3 = self.density_rhs(&m, &diss, &(&rho + &k2 * cf(0.5 * dt)));
                let k4 = self.density_rhs(&m, &diss, &(&rho + &k3 * cf(dt)));
                rho += (k1 + (k2 + k3) * cf(2.0) + k4) * cf(dt / 6.0);
                rec.push_step(i + 1, n, t_next, &rho);
            }
        } else {
            let mut h0 = self.hamiltonian(seg.k_start) * (-I);
            for i in 0..n {
                let t = seg.t_start + i as f64 * dt;
                let t_next = if i + 1 == n { seg.t_end } else { seg.t_start + (i + 1) as f64 * dt };
                let k_mid = seg.k_at(t + 0.5 * dt);
                let diss = self.dissipator(k_mid)?;
                let h1 = self.hamiltonian(seg.k_at(t_next)) * (-I);
                let m_mid = self.drift(k_mid, &diss);
                let (m0, m1) = match &diss.half_anti {
                    Some(half) => (&h0 + half, &h1 + half),
                    None => (h0.clone(), h1.clone()),
                };
                let k1 = self.density_rhs(&m0, &diss, &rho);
                let k2 = self.density_rhs(&m_mid, &diss, &(&rho + &k1 * cf(0.5 * dt)));
                let k3 = self.density_rhs(&m_mid, &diss, &(&rho + &k2 * cf(0.5 * dt)));
                let k4 = self.density_rhs(&m1, &diss, &(&rho + &k3 * cf(dt)));
                rho += (k1 + (k2 + k3) * cf(2.0) + k4) * cf(dt / 6.0);
                h0 = h1;
                rec.push_step(i + 1, n, t_next, &rho);
            }
        }
        self.check_density(&rho, seg.t_end, true)?;
        Ok(rho)
    }

    fn exact_hold(&self, rho: &CMatrix, k: f64, t: f64) -> Result<CMatrix> {
        match &self.dissipation {
            Dissipation::Closed => {
                let h = self.hamiltonian(k);
                let sys = eigensystem_of_matrix(&h, self.n_qubits)?;
                let u = exact_unitary_matrix(&sys, t);
                Ok(mul_adj(&mul(&u, rho), &u))
            }
            Dissipation::Davies { .. } => {
                let diss = self.dissipator(k)?;
                let (sys, rates) = diss.eigen.as_ref().expect("eigenbasis dissipator");
                Ok(davies_hold(sys, rates, rho, t))
            }
            Dissipation::Lab { .. } => {
                let diss = self.dissipator(k)?;
                let l = self.liouvillian(&self.drift(k, &diss));
                let d = self.dim();
                let vec = CVector::from_column_slice(rho.as_slice());
                let out = (l * cf(t)).exp() * vec;
                Ok(CMatrix::from_column_slice(d, d, out.as_slice()))
            }
        }
    }

    /// Column-stacked superoperator of the lab-frame generator.
    fn liouvillian(&self, drift: &CMatrix) -> CMatrix {
        let d = self.dim();
        let id = CMatrix::identity(d, d);
        // vec(AρB) = (Bᵀ ⊗ A) vec(ρ)
        let mut l = id.kronecker(drift) + drift.conjugate().kronecker(&id);
        if let Dissipation::Lab { jumps, .. } = &self.dissipation {
            for c in jumps {
                l += c.conjugate().kronecker(c);
            }
        }
        l
    }

    fn check_density(&self, rho: &CMatrix, t: f64, spectrum: bool) -> Result<()> {
        let tr = rho.trace().re;
        let drift = (tr - 1.0).abs();
        if !(drift <= TRACE_DRIFT_TOL) {
            return Err(DynamicsError::TraceDrift { t, drift });
        }
        let herm = hermiticity_error(rho);
        if !(herm <= HERMITICITY_TOL) {
            return Err(DynamicsError::Hermiticity { t, error: herm });
        }
        if spectrum {
            let min = DensityMatrix::from_parts_unchecked(self.n_qubits, hermitize(rho)).min_eigenvalue();
            if min < -POSITIVITY_TOL {
                return Err(DynamicsError::Positivity { t, min_eigenvalue: min });
            }
        }
        Ok(())
    }

    /// Master-equation evolution along `path`.
    pub fn run_density(&self, rho0: &DensityMatrix, path: &PiecewiseSchedule) -> Result<Trajectory<DensityMatrix>> {
        self.check_dim(rho0.dim())?;
        let mut rec = Recorder::new(self.cfg.record_stride, true);
        rec.push_end(0.0, rho0.matrix());
        let mut rho = rho0.matrix().clone();
        for seg in path.segments() {
            rho = self.density_segment(rho, &seg, &mut rec)?;
        }
        let n = self.n_qubits;
        Ok(rec.finish(|m| DensityMatrix::from_parts_unchecked(n, hermitize(&m))))
    }

    /// Final density matrix after a single segment.
    pub fn propagate_density(&self, rho: &DensityMatrix, seg: &Segment) -> Result<DensityMatrix> {
        self.check_dim(rho.dim())?;
        let mut rec = Recorder::new(1, false);
        let out = self.density_segment(rho.matrix().clone(), seg, &mut rec)?;
        Ok(DensityMatrix::from_parts_unchecked(self.n_qubits, hermitize(&out)))
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cf(0.5)
}

fn exact_unitary_matrix(sys: &EigenSystem, t: f64) -> CMatrix {
    let v = sys.vectors();
    let mut scaled = v.clone();
    for (j, e) in sys.energies().iter().enumerate() {
        let phase = (-I * e * t).exp();
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= phase);
    }
    mul_adj(&scaled, v)
}

fn exact_unitary(sys: &EigenSystem, psi: &CVector, t: f64) -> CVector {
    let v = sys.vectors();
    let mut coeffs = v.adjoint() * psi;
    for (c, e) in coeffs.iter_mut().zip(sys.energies()) {
        *c *= (-I * e * t).exp();
    }
    v * coeffs
}

/// Exact propagation under a constant eigenbasis generator: populations follow
/// `exp(G·t)`, coherences rotate and decay at the mean escape rate.
fn davies_hold(sys: &EigenSystem, rates: &DMatrix<f64>, rho: &CMatrix, t: f64) -> CMatrix {
    let d = rates.nrows();
    let v = sys.vectors();
    let mut tilde = adj_mul(v, &mul(rho, v));
    let escape: Vec<f64> = (0..d).map(|n| rates.row(n).sum()).collect();
    let mut gen = rates.transpose();
    for n in 0..d {
        gen[(n, n)] = -escape[n];
    }
    let pops = DVector::<f64>::from_iterator(d, (0..d).map(|n| tilde[(n, n)].re));
    let pops = (gen * t).exp() * pops;
    let e = sys.energies();
    for a in 0..d {
        for b in 0..d {
            if a == b {
                tilde[(a, a)] = cf(pops[a]);
            } else {
                let decay = -0.5 * (escape[a] + escape[b]) * t;
                tilde[(a, b)] *= (C64::new(decay, -(e[a] - e[b]) * t)).exp();
            }
        }
    }
    mul_adj(&mul(v, &tilde), v)
}

struct Recorder<T> {
    stride: usize,
    enabled: bool,
    times: Vec<f64>,
    states: Vec<T>,
}

impl<T: Clone> Recorder<T> {
    fn new(stride: usize, enabled: bool) -> Self {
        Self {
            stride,
            enabled,
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    fn push_end(&mut self, t: f64, s: &T) {
        if self.enabled {
            self.times.push(t);
            self.states.push(s.clone());
        }
    }

    fn push_step(&mut self, step: usize, n_steps: usize, t: f64, s: &T) {
        if step % self.stride == 0 || step == n_steps {
            self.push_end(t, s);
        }
    }

    fn finish<S>(self, map: impl Fn(T) -> S) -> Trajectory<S> {
        Trajectory {
            times: self.times,
            states: self.states.into_iter().map(map).collect(),
        }
    }
}

/// Solves `dψ/dt = −iH(k(t))ψ` along the reverse-anneal schedule.
pub fn evolve_closed(
    psi0: &StateVector,
    schedule: &RqaSchedule,
    params: &ModelParams,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<StateVector>> {
    schedule.validate()?;
    Evolver::new(params, &NoiseSpec::none(), cfg)?.run_closed(psi0, &schedule.path())
}

/// Integrates the Lindblad equation along the reverse-anneal schedule.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    schedule: &RqaSchedule,
    params: &ModelParams,
    noise: &NoiseSpec,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<DensityMatrix>> {
    schedule.validate()?;
    Evolver::new(params, noise, cfg)?.run_density(rho0, &schedule.path())
}

/// Constant-Hamiltonian evolution over `[0, duration]`.
pub fn evolve_static_closed(
    psi0: &StateVector,
    h: &HermitianOperator,
    duration: f64,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<StateVector>> {
    let path = static_path(duration)?;
    Evolver::with_hamiltonian(h, &NoiseSpec::none(), cfg)?.run_closed(psi0, &path)
}

pub fn evolve_static_lindblad(
    rho0: &DensityMatrix,
    h: &HermitianOperator,
    duration: f64,
    noise: &NoiseSpec,
    cfg: &EvolutionConfig,
) -> Result<Trajectory<DensityMatrix>> {
    let path = static_path(duration)?;
    Evolver::with_hamiltonian(h, noise, cfg)?.run_density(rho0, &path)
}

fn static_path(duration: f64) -> Result<PiecewiseSchedule> {
    use crate::model::SchedulePoint;
    Ok(PiecewiseSchedule::new(vec![
        SchedulePoint { t: 0.0, k: 1.0 },
        SchedulePoint { t: duration, k: 1.0 },
    ])?)
}
