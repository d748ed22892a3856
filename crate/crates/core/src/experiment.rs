//! The relaxation-time measurement protocol: prepare the excited classical
//! configuration, run the reverse anneal for each hold time, read out in the
//! computational basis, and fit `a·exp(−t2/T1)` to the survival curve.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annealer::{to_anneal_job, JobStatus, Sampler};
use crate::dynamics::{DynamicsError, EvolutionConfig, Evolver};
use crate::model::{initial_excited_configuration, ModelError, ModelParams, PiecewiseSchedule, RqaSchedule, Segment};
use crate::noise::{davies_rate_matrix, NoiseError, NoiseMode, NoiseSpec};
use crate::operators::{eigensystem_of_matrix, DensityMatrix, OperatorError, SpinConfiguration, StateVector};

pub const DEFAULT_SHOTS: u64 = 100_000;
/// Probability mass allowed to go missing before readout is refused.
pub const MASS_TOL: f64 = 1e-6;
/// Number of points in an automatically chosen hold-time grid.
pub const AUTO_GRID_POINTS: usize = 12;
const FIT_MAX_ITER: usize = 500;
/// Fitted decay rates below this many standard errors are rejected.
const FIT_SIGNIFICANCE: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points to fit, got {0}")]
    TooFewPoints(usize),
    #[error("all survival values are equal; T1 is unidentifiable")]
    Unidentifiable,
    #[error("no significant decay (rate {rate:e} ± {sigma:e} per μs)")]
    NoDecay { rate: f64, sigma: f64 },
    #[error("fit did not converge after {0} iterations")]
    NoConvergence(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("counts are empty")]
    EmptyCounts,
    #[error("probability mass {0} deviates from 1")]
    ProbabilityMass(f64),
    #[error("sampler failed at t2 = {t2} μs: {message}")]
    Sampler { t2: f64, message: String },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

/// Ramp durations and hold point; the hold time comes from the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleTemplate {
    #[serde(rename = "t1_us", default = "one_us")]
    pub t1: f64,
    #[serde(rename = "t3_us", default = "one_us")]
    pub t3: f64,
    pub h_d: f64,
}

fn one_us() -> f64 {
    1.0
}

impl ScheduleTemplate {
    pub fn new(t1: f64, t3: f64, h_d: f64) -> Self {
        Self { t1, t3, h_d }
    }

    pub fn with_hold(&self, t2: f64) -> Result<RqaSchedule> {
        Ok(RqaSchedule::new(self.t1, t2, self.t3, self.h_d)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Simulated,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub schedule: ScheduleTemplate,
    /// Hold times in μs; `None` picks a grid from a short pilot run.
    #[serde(rename = "t2_grid_us", default)]
    pub t2_grid: Option<Vec<f64>>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    /// Worker-thread cap for independent points.
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

impl ExperimentConfig {
    pub fn new(params: ModelParams, schedule: ScheduleTemplate, noise: NoiseSpec) -> Self {
        Self {
            params,
            schedule,
            t2_grid: None,
            shots: DEFAULT_SHOTS,
            noise,
            seed: 0,
            sampler: SamplerKind::Simulated,
            evolution: EvolutionConfig::default(),
            threads: None,
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.t2_grid = Some(grid);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.schedule.with_hold(0.0)?;
        self.noise.validate()?;
        self.evolution.validate()?;
        if self.shots == 0 {
            return Err(ExperimentError::InvalidConfig("shots must be ≥ 1".into()));
        }
        if self.threads == Some(0) {
            return Err(ExperimentError::InvalidConfig("threads must be ≥ 1".into()));
        }
        if let Some(grid) = &self.t2_grid {
            validate_grid(grid)?;
        }
        Ok(())
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(ExperimentError::InvalidConfig("t2 grid is empty".into()));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(ExperimentError::InvalidConfig("t2 values must be finite and ≥ 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::InvalidConfig("t2 grid must be strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPoint {
    #[serde(rename = "t2_us")]
    pub t2: f64,
    pub survival: f64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub points: Vec<SurvivalPoint>,
    pub initial: SpinConfiguration,
}

impl SurvivalCurve {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t2).collect()
    }

    pub fn survivals(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.survival).collect()
    }

    /// `t2_us,survival,shots` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t2_us,survival,shots\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", fmt_f64(p.t2), fmt_f64(p.survival), p.shots);
        }
        out
    }
}

/// Scalar formatting shared by all persisted tables: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a: f64,
    #[serde(rename = "t1_us")]
    pub t1: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// Covariance of `(a, T1)`.
    pub covariance: [[f64; 2]; 2],
}

impl DecayFit {
    pub fn t1_stderr(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }

    pub fn predict(&self, t2: f64) -> f64 {
        self.a * (-t2 / self.t1).exp()
    }

    pub fn to_json(&self) -> String {
        let row = |r: [f64; 2]| format!("[{},{}]", fmt_f64(r[0]), fmt_f64(r[1]));
        format!(
            "{{\"a\":{},\"t1_us\":{},\"residual\":{},\"covariance\":[{},{}]}}",
            fmt_f64(self.a),
            fmt_f64(self.t1),
            fmt_f64(self.residual),
            row(self.covariance[0]),
            row(self.covariance[1]),
        )
    }
}

// ---- readout ----

/// Multinomial readout of computational-basis populations.
///
/// Small negative populations are clamped to zero and the rest renormalized;
/// a total mass off by more than [`MASS_TOL`] is an error.
pub fn sample_populations(
    populations: &[f64],
    n_qubits: usize,
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<SpinConfiguration, u64>> {
    if shots == 0 {
        return Err(ExperimentError::InvalidConfig("shots must be ≥ 1".into()));
    }
    let mass: f64 = populations.iter().sum();
    if !((mass - 1.0).abs() <= MASS_TOL) {
        return Err(ExperimentError::ProbabilityMass(mass));
    }
    let clamped: Vec<f64> = populations.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    let mut left = shots;
    let mut rest = 1.0;
    for (i, &p) in clamped.iter().enumerate() {
        if left == 0 {
            break;
        }
        let p = p / total;
        let q = if rest > 0.0 { (p / rest).clamp(0.0, 1.0) } else { 1.0 };
        let drawn = if i + 1 == clamped.len() || q >= 1.0 {
            left
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("probability in (0, 1)").sample(&mut rng)
        };
        if drawn > 0 {
            counts.insert(SpinConfiguration::from_index(i, n_qubits)?, drawn);
        }
        left -= drawn;
        rest -= p;
    }
    Ok(counts)
}

/// Multinomial draw from `diag(ρ)`; deterministic for a given seed.
pub fn sample_readout(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<BTreeMap<SpinConfiguration, u64>> {
    sample_populations(&rho.populations(), rho.n_qubits(), shots, seed)
}

/// Fraction of reads equal to `initial`.
pub fn survival_probability(counts: &BTreeMap<SpinConfiguration, u64>, initial: &SpinConfiguration) -> Result<f64> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(ExperimentError::EmptyCounts);
    }
    Ok(counts.get(initial).copied().unwrap_or(0) as f64 / total as f64)
}

// ---- simulation ----

/// Pure state for closed runs, density matrix otherwise.
#[derive(Debug, Clone)]
pub(crate) enum SimState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl SimState {
    pub(crate) fn prepare(initial: &SpinConfiguration, noise: &NoiseSpec) -> Self {
        let psi = StateVector::basis(initial);
        if noise.is_closed() {
            SimState::Pure(psi)
        } else {
            SimState::Mixed(psi.to_density())
        }
    }

    pub(crate) fn propagate(self, evolver: &Evolver, seg: &Segment) -> Result<Self> {
        Ok(match self {
            SimState::Pure(psi) => SimState::Pure(evolver.propagate_state(&psi, seg)?),
            SimState::Mixed(rho) => SimState::Mixed(evolver.propagate_density(&rho, seg)?),
        })
    }

    pub(crate) fn populations(&self) -> Vec<f64> {
        match self {
            SimState::Pure(psi) => psi.probabilities(),
            SimState::Mixed(rho) => rho.populations(),
        }
    }

    pub(crate) fn n_qubits(&self) -> usize {
        match self {
            SimState::Pure(psi) => psi.n_qubits(),
            SimState::Mixed(rho) => rho.n_qubits(),
        }
    }
}

/// Runs `state` through `segments` and samples the final readout.
pub(crate) fn simulate_and_sample(
    evolver: &Evolver,
    state: SimState,
    segments: &[Segment],
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<SpinConfiguration, u64>> {
    let mut state = state;
    for seg in segments {
        state = state.propagate(evolver, seg)?;
    }
    sample_populations(&state.populations(), state.n_qubits(), shots, seed)
}

/// Where each protocol run is executed.
#[derive(Clone, Copy)]
pub enum Backend<'a> {
    /// Direct simulation, sharing the initial ramp across hold times.
    InProcess,
    /// Any job-level sampler, e.g. a remote service.
    Sampler(&'a dyn Sampler),
}

impl std::fmt::Debug for Backend<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::InProcess => f.write_str("InProcess"),
            Backend::Sampler(_) => f.write_str("Sampler"),
        }
    }
}

pub(crate) fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ExperimentError::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Evaluates survival at each hold time. Point `i` is sampled with seed
/// `seed + i`.
fn measure_points(
    cfg: &ExperimentConfig,
    backend: Backend<'_>,
    initial: &SpinConfiguration,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<SurvivalPoint>> {
    let seed_of = |i: usize| seed.wrapping_add(i as u64);
    let results: Vec<Result<SurvivalPoint>> = match backend {
        Backend::InProcess => {
            let evolver = Evolver::new(&cfg.params, &cfg.noise, &cfg.evolution)?;
            let ramp_down = cfg.schedule.with_hold(0.0)?.path().segments()[0];
            let after_ramp = SimState::prepare(initial, &cfg.noise).propagate(&evolver, &ramp_down)?;
            grid.par_iter()
                .enumerate()
                .map(|(i, &t2)| {
                    let segments = cfg.schedule.with_hold(t2)?.path().segments();
                    let counts = simulate_and_sample(&evolver, after_ramp.clone(), &segments[1..], cfg.shots, seed_of(i))?;
                    Ok(SurvivalPoint {
                        t2,
                        survival: survival_probability(&counts, initial)?,
                        shots: cfg.shots,
                    })
                })
                .collect()
        }
        Backend::Sampler(sampler) => grid
            .par_iter()
            .enumerate()
            .map(|(i, &t2)| {
                let fail = |message: String| ExperimentError::Sampler { t2, message };
                let job = to_anneal_job(cfg, t2)?;
                let result = sampler.sample(&job, seed_of(i)).map_err(|e| fail(e.to_string()))?;
                if result.status != JobStatus::Completed {
                    return Err(fail(format!(
                        "job {} finished with status {:?}: {}",
                        result.id,
                        result.status,
                        result.message.clone().unwrap_or_default()
                    )));
                }
                let counts = result.count_map().map_err(|e| fail(e.to_string()))?;
                let shots = counts.values().sum();
                Ok(SurvivalPoint {
                    t2,
                    survival: survival_probability(&counts, initial)?,
                    shots,
                })
            })
            .collect(),
    };
    results.into_iter().collect()
}

/// Runs the protocol over the configured hold-time grid.
pub fn run_t1_experiment(cfg: &ExperimentConfig, backend: Backend<'_>) -> Result<SurvivalCurve> {
    cfg.validate()?;
    let initial = initial_excited_configuration(&cfg.params)?;
    with_threads(cfg.threads, || {
        let grid = match &cfg.t2_grid {
            Some(g) => g.clone(),
            None => auto_grid(cfg, backend, &initial)?,
        };
        let points = measure_points(cfg, backend, &initial, &grid, cfg.seed)?;
        Ok(SurvivalCurve { points, initial })
    })?
}

/// Rough decay time of the excited state at the hold point, from the
/// noise model alone.
pub fn decay_time_estimate(cfg: &ExperimentConfig) -> Result<Option<f64>> {
    if cfg.noise.is_closed() {
        return Ok(None);
    }
    let rate = match cfg.noise.mode {
        NoiseMode::None => return Ok(None),
        NoiseMode::LabFrame => cfg.noise.rate * cfg.params.n_qubits as f64,
        NoiseMode::EigenbasisDavies => {
            let terms = crate::model::HamiltonianTerms::new(&cfg.params)?;
            let sys = eigensystem_of_matrix(&terms.matrix_at(cfg.schedule.h_d), cfg.params.n_qubits)?;
            davies_rate_matrix(&sys, &cfg.noise)?.escape_rate(1)
        }
    };
    Ok((rate > 0.0 && rate.is_finite()).then(|| 1.0 / rate))
}

/// Seed offset for pilot runs, keeping them off the main point streams.
const PILOT_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Log-spaced grid from `0.1·T1` to `3·T1`, with `T1` guessed by a
/// log-linear fit to three pilot points.
fn auto_grid(cfg: &ExperimentConfig, backend: Backend<'_>, initial: &SpinConfiguration) -> Result<Vec<f64>> {
    let tau = decay_time_estimate(cfg)?.ok_or_else(|| {
        ExperimentError::InvalidConfig("no decay expected; an explicit t2 grid is required".into())
    })?;
    let pilot_grid = [0.0, 0.5 * tau, tau];
    let pilot = measure_points(cfg, backend, initial, &pilot_grid, cfg.seed ^ PILOT_SEED_SALT)?;
    let guess = pilot_decay_time(&pilot).unwrap_or(tau);
    Ok(geometric_grid(0.1 * guess, 3.0 * guess, AUTO_GRID_POINTS))
}

fn pilot_decay_time(points: &[SurvivalPoint]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.survival > 0.0)
        .map(|p| (p.t2, p.survival.ln()))
        .collect();
    let (_, slope) = linear_regression(&usable)?;
    (slope < 0.0).then(|| -1.0 / slope)
}

/// `n` points from `lo` to `hi` inclusive, equally spaced in `ln t`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..n)
        .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn linear_regression(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

// ---- fitting ----

/// Least-squares fit of `a·exp(−t/T1)`.
///
/// Levenberg–Marquardt on `(a, rate)` with times scaled by the largest `t`,
/// started from a log-linear regression. The decay rate must exceed three
/// standard errors.
pub fn fit_exponential(curve: &SurvivalCurve) -> Result<DecayFit, FitError> {
    fit_exponential_points(&curve.times(), &curve.survivals())
}

pub fn fit_exponential_points(times: &[f64], values: &[f64]) -> Result<DecayFit, FitError> {
    let n = times.len().min(values.len());
    if n < 3 {
        return Err(FitError::TooFewPoints(n));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(FitError::Unidentifiable);
    }
    let scale = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale <= 0.0 {
        return Err(FitError::Unidentifiable);
    }
    let tau: Vec<f64> = times.iter().map(|t| t / scale).collect();
    let ys = &values[..n];

    let logs: Vec<(f64, f64)> = tau
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    let (mut a, mut r) = match linear_regression(&logs) {
        Some((b0, b1)) if b1 < 0.0 && b0.is_finite() => (b0.exp(), -b1),
        _ => (ys.iter().cloned().fold(f64::MIN, f64::max), 1.0),
    };

    let cost = |a: f64, r: f64| -> f64 {
        tau.iter()
            .zip(ys)
            .map(|(&t, &y)| (y - a * (-r * t).exp()).powi(2))
            .sum()
    };
    let normal = |a: f64, r: f64| -> (Matrix2<f64>, Vector2<f64>) {
        let mut jtj = Matrix2::zeros();
        let mut jte = Vector2::zeros();
        for (&t, &y) in tau.iter().zip(ys) {
            let e = (-r * t).exp();
            let g = Vector2::new(e, -a * t * e);
            jtj += g * g.transpose();
            jte += g * (y - a * e);
        }
        (jtj, jte)
    };

    let mut c = cost(a, r);
    let mut mu = 1e-3;
    let mut converged = false;
    for _ in 0..FIT_MAX_ITER {
        let (jtj, jte) = normal(a, r);
        let mut damped = jtj;
        damped[(0, 0)] *= 1.0 + mu;
        damped[(1, 1)] *= 1.0 + mu;
        let Some(step) = damped.lu().solve(&jte) else {
            mu *= 10.0;
            continue;
        };
        let (na, nr) = (a + step[0], r + step[1]);
        let nc = cost(na, nr);
        if nc.is_finite() && nc <= c {
            let small = step[0].abs() <= 1e-14 * (a.abs() + 1e-300) && step[1].abs() <= 1e-14 * (r.abs() + 1e-300);
            let flat = c - nc <= 1e-30 + 1e-15 * c;
            a = na;
            r = nr;
            c = nc;
            mu = (mu / 3.0).max(1e-15);
            if small || flat {
                converged = true;
                break;
            }
        } else {
            mu *= 2.0;
            if mu > 1e20 {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(FitError::NoConvergence(FIT_MAX_ITER));
    }

    let (jtj, _) = normal(a, r);
    let dof = n.saturating_sub(2).max(1) as f64;
    let sigma2 = c / dof;
    let cov_ar = jtj.try_inverse().map(|m| m * sigma2).unwrap_or(Matrix2::from_element(f64::INFINITY));
    let sigma_r = cov_ar[(1, 1)].max(0.0).sqrt();
    if !(r > 0.0 && r > FIT_SIGNIFICANCE * sigma_r) {
        return Err(FitError::NoDecay {
            rate: r / scale,
            sigma: sigma_r / scale,
        });
    }
    let t1 = scale / r;
    // d(T1)/d(r) = −scale / r²
    let g = Matrix2::new(1.0, 0.0, 0.0, -scale / (r * r));
    let cov = g * cov_ar * g.transpose();
    Ok(DecayFit {
        a,
        t1,
        residual: (c / n as f64).sqrt(),
        covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
    })
}

// ---- sweeps ----

/// Survival at a fixed hold time for each hold point; point `i` uses seed
/// `seed + i`.
pub fn sweep_hd(cfg: &ExperimentConfig, hd_grid: &[f64], t2: f64, backend: Backend<'_>) -> Result<Vec<(f64, f64)>> {
    if hd_grid.is_empty() {
        return Err(ExperimentError::InvalidConfig("h_d grid is empty".into()));
    }
    cfg.validate()?;
    with_threads(cfg.threads, || {
        hd_grid
            .par_iter()
            .enumerate()
            .map(|(i, &h_d)| {
                let mut point = cfg.clone();
                point.schedule.h_d = h_d;
                point.validate()?;
                let initial = initial_excited_configuration(&point.params)?;
                let p = measure_points(&point, backend, &initial, &[t2], cfg.seed.wrapping_add(i as u64))?;
                Ok((h_d, p[0].survival))
            })
            .collect()
    })?
}

#[derive(Debug, Clone, PartialEq)]
pub struct T1SweepPoint {
    pub h_d: f64,
    pub curve: SurvivalCurve,
    pub fit: Result<DecayFit, FitError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct T1Sweep {
    pub points: Vec<T1SweepPoint>,
}

impl T1Sweep {
    /// `(h_d, T1)` for the points whose fit succeeded.
    pub fn t1_values(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.fit.as_ref().ok().map(|f| (p.h_d, f.t1)))
            .collect()
    }

    /// True when every point fitted and T1 rises strictly with `h_d`.
    pub fn strictly_increasing(&self) -> bool {
        let vals = self.t1_values();
        vals.len() == self.points.len() && vals.windows(2).all(|w| w[1].1 > w[0].1)
    }

    /// Interior `h_d` values whose T1 is below both neighbours.
    pub fn local_minima(&self) -> Vec<f64> {
        let vals = self.t1_values();
        vals.windows(3)
            .filter(|w| w[1].1 < w[0].1 && w[1].1 < w[2].1)
            .map(|w| w[1].0)
            .collect()
    }

    /// Index pairs `(i, i+1)` where T1 does not increase.
    pub fn monotonicity_violations(&self) -> Vec<(f64, f64)> {
        self.t1_values()
            .windows(2)
            .filter(|w| w[1].1 <= w[0].1)
            .map(|w| (w[0].0, w[1].0))
            .collect()
    }
}

/// Seed stride between hold points of a T1 sweep.
const SWEEP_SEED_STRIDE: u64 = 1 << 32;

/// A full T1 experiment per hold point. Hold point `i` uses base seed
/// `seed + i·2³²`; fit failures are kept per point.
pub fn sweep_t1_vs_hd(cfg: &ExperimentConfig, hd_grid: &[f64], backend: Backend<'_>) -> Result<T1Sweep> {
    if hd_grid.is_empty() {
        return Err(ExperimentError::InvalidConfig("h_d grid is empty".into()));
    }
    cfg.validate()?;
    let points = with_threads(cfg.threads, || {
        hd_grid
            .par_iter()
            .enumerate()
            .map(|(i, &h_d)| {
                let mut point = cfg.clone();
                point.schedule.h_d = h_d;
                point.seed = cfg.seed.wrapping_add((i as u64).wrapping_mul(SWEEP_SEED_STRIDE));
                point.threads = None;
                let curve = run_t1_experiment(&point, backend)?;
                let fit = fit_exponential(&curve);
                Ok(T1SweepPoint { h_d, curve, fit })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(T1Sweep { points })
}

/// Full path for one hold time, as used by job-level samplers.
pub fn protocol_path(cfg: &ExperimentConfig, t2: f64) -> Result<PiecewiseSchedule> {
    Ok(cfg.schedule.with_hold(t2)?.path())
}
