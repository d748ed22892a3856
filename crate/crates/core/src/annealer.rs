//! Job-level sampler interface and the reverse-anneal job wire format.
//!
//! Request:
//! `{"h":[…],"j":{"0,1":-1.0,…},"anneal_schedule":[[t,k],…],"initial_state":[1,…],"num_reads":N,"reinitialize_state":true}`
//!
//! Response: `{"id":"…","status":"completed","samples":[[1,…],…],"counts":[…]}`
//!
//! Ising convention: energy `Σ h_i s_i + Σ J_ij s_i s_j` with `s = +1` for ↑,
//! so `h_i = h/2` and `J_ij = −J` for the model's `H_L + H_P`.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dynamics::{EvolutionConfig, Evolver};
use crate::experiment::{simulate_and_sample, ExperimentConfig, ExperimentError, SimState};
use crate::model::{initial_excited_configuration, ModelParams, PiecewiseSchedule, SchedulePoint};
use crate::noise::NoiseSpec;
use crate::operators::{SpinConfiguration, MAX_QUBITS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid job: {0}")]
    InvalidJob(String),
    #[error("unsupported job: {0}")]
    Unsupported(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("backend error: {0}")]
    Backend(String),
}

impl From<ExperimentError> for SamplerError {
    fn from(e: ExperimentError) -> Self {
        SamplerError::Simulation(e.to_string())
    }
}

/// Quadratic couplings keyed by `(i, j)` with `i < j`, serialized as `"i,j"`
/// keys in numeric order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Couplings(pub BTreeMap<(usize, usize), f64>);

impl Serialize for Couplings {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for ((i, j), v) in &self.0 {
            map.serialize_entry(&format!("{i},{j}"), v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Couplings {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Couplings;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from \"i,j\" to coupling strength")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Couplings, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((key, value)) = access.next_entry::<String, f64>()? {
                    let pair = parse_pair(&key).ok_or_else(|| de::Error::custom(format!("bad coupling key {key:?}")))?;
                    if out.insert(pair, value).is_some() {
                        return Err(de::Error::custom(format!("duplicate coupling key {key:?}")));
                    }
                }
                Ok(Couplings(out))
            }
        }
        d.deserialize_map(V)
    }
}

fn parse_pair(key: &str) -> Option<(usize, usize)> {
    let (a, b) = key.split_once(',')?;
    let canonical = |s: &str| !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if !canonical(a) || !canonical(b) {
        return None;
    }
    Some((a.parse().ok()?, b.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealJob {
    pub h: Vec<f64>,
    pub j: Couplings,
    /// Piecewise-linear `(t μs, k)` vertices.
    pub anneal_schedule: Vec<[f64; 2]>,
    /// Spins, `+1` for ↑ and `−1` for ↓.
    pub initial_state: Vec<i64>,
    pub num_reads: u64,
    pub reinitialize_state: bool,
}

impl AnnealJob {
    pub fn n_qubits(&self) -> usize {
        self.h.len()
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: String| Err(SamplerError::InvalidJob(m));
        let n = self.n_qubits();
        if n == 0 || n > MAX_QUBITS {
            return bad(format!("register of {n} qubits is not supported"));
        }
        if self.h.iter().chain(self.j.0.values()).any(|v| !v.is_finite()) {
            return bad("non-finite bias or coupling".into());
        }
        if let Some((i, j)) = self.j.0.keys().find(|(i, j)| i >= j || *j >= n) {
            return bad(format!("coupling ({i},{j}) needs i < j < {n}"));
        }
        if self.initial_state.len() != n {
            return bad(format!("initial state has {} spins for {n} qubits", self.initial_state.len()));
        }
        if self.initial_state.iter().any(|s| *s != 1 && *s != -1) {
            return bad("spins must be ±1".into());
        }
        if self.num_reads == 0 {
            return bad("num_reads must be ≥ 1".into());
        }
        self.path()?;
        Ok(())
    }

    pub fn path(&self) -> Result<PiecewiseSchedule, SamplerError> {
        let points = self
            .anneal_schedule
            .iter()
            .map(|&[t, k]| SchedulePoint { t, k })
            .collect();
        PiecewiseSchedule::new(points).map_err(|e| SamplerError::InvalidJob(e.to_string()))
    }

    pub fn initial_configuration(&self) -> Result<SpinConfiguration, SamplerError> {
        SpinConfiguration::from_spins(&self.initial_state).map_err(|e| SamplerError::InvalidJob(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("job serializes")
    }

    /// Parses and validates a job.
    pub fn from_json(s: &str) -> Result<Self, SamplerError> {
        let job: AnnealJob = serde_json::from_str(s).map_err(|e| SamplerError::InvalidJob(e.to_string()))?;
        job.validate()?;
        Ok(job)
    }
}

/// Uniform `(N, J, h)` from a job; the transverse field and energy scale are
/// supplied by the caller because the wire format does not carry them.
pub fn job_model_params(job: &AnnealJob, transverse: f64, energy_scale: f64) -> Result<ModelParams, SamplerError> {
    job.validate()?;
    let n = job.n_qubits();
    let bias = job.h[0];
    if job.h.iter().any(|&b| b != bias) {
        return Err(SamplerError::Unsupported("non-uniform linear biases".into()));
    }
    let coupling = match job.j.0.values().next() {
        None => 0.0,
        Some(&first) => {
            if job.j.0.len() != n * (n - 1) / 2 || job.j.0.values().any(|&v| v != first) {
                return Err(SamplerError::Unsupported("couplings must be uniform and all-to-all".into()));
            }
            -first
        }
    };
    let params = ModelParams {
        n_qubits: n,
        coupling,
        longitudinal: 2.0 * bias,
        transverse,
        energy_scale,
    };
    params.validate().map_err(|e| SamplerError::InvalidJob(e.to_string()))?;
    Ok(params)
}

/// Job for one hold time of an experiment.
pub fn to_anneal_job(cfg: &ExperimentConfig, t2: f64) -> Result<AnnealJob, ExperimentError> {
    let p = &cfg.params;
    p.validate()?;
    let schedule = cfg.schedule.with_hold(t2)?;
    let n = p.n_qubits;
    let mut j = BTreeMap::new();
    if p.coupling != 0.0 {
        for a in 0..n {
            for b in a + 1..n {
                j.insert((a, b), -p.coupling);
            }
        }
    }
    Ok(AnnealJob {
        h: vec![p.longitudinal / 2.0; n],
        j: Couplings(j),
        anneal_schedule: schedule.vertices().iter().map(|v| [v.t, v.k]).collect(),
        initial_state: initial_excited_configuration(p)?.spins(),
        num_reads: cfg.shots,
        reinitialize_state: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Completed,
    Failed,
    Pending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobResult {
    pub id: String,
    pub status: JobStatus,
    #[serde(default)]
    pub samples: Vec<Vec<i64>>,
    #[serde(default)]
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl JobResult {
    pub fn completed(id: String, counts: &BTreeMap<SpinConfiguration, u64>) -> Self {
        Self {
            id,
            status: JobStatus::Completed,
            samples: counts.keys().map(|c| c.spins()).collect(),
            counts: counts.values().copied().collect(),
            message: None,
        }
    }

    pub fn pending(id: String) -> Self {
        Self {
            id,
            status: JobStatus::Pending,
            samples: Vec::new(),
            counts: Vec::new(),
            message: None,
        }
    }

    pub fn failed(id: String, message: String) -> Self {
        Self {
            id,
            status: JobStatus::Failed,
            samples: Vec::new(),
            counts: Vec::new(),
            message: Some(message),
        }
    }

    pub fn total_reads(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Aggregated counts; repeated samples are summed.
    pub fn count_map(&self) -> Result<BTreeMap<SpinConfiguration, u64>, SamplerError> {
        if self.samples.len() != self.counts.len() {
            return Err(SamplerError::Backend(format!(
                "{} samples but {} counts",
                self.samples.len(),
                self.counts.len()
            )));
        }
        let mut out = BTreeMap::new();
        for (s, &c) in self.samples.iter().zip(&self.counts) {
            let cfg = SpinConfiguration::from_spins(s).map_err(|e| SamplerError::Backend(e.to_string()))?;
            *out.entry(cfg).or_insert(0) += c;
        }
        Ok(out)
    }
}

/// Anything that can execute a reverse-anneal job.
pub trait Sampler: Send + Sync {
    fn sample(&self, job: &AnnealJob, seed: u64) -> Result<JobResult, SamplerError>;
}

/// In-process execution of jobs with the same simulation used by
/// [`crate::experiment::run_t1_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSampler {
    pub noise: NoiseSpec,
    pub evolution: EvolutionConfig,
    /// Transverse-field amplitude `Γ`, not part of the wire format.
    pub transverse: f64,
    pub energy_scale: f64,
}

impl SimulatedSampler {
    pub fn new(noise: NoiseSpec) -> Self {
        Self {
            noise,
            evolution: EvolutionConfig::default(),
            transverse: 1.0,
            energy_scale: 1.0,
        }
    }

    /// Sampler matching the hidden parameters of an experiment config.
    pub fn for_experiment(cfg: &ExperimentConfig) -> Self {
        Self {
            noise: cfg.noise,
            evolution: cfg.evolution,
            transverse: cfg.params.transverse,
            energy_scale: cfg.params.energy_scale,
        }
    }
}

impl Sampler for SimulatedSampler {
    fn sample(&self, job: &AnnealJob, seed: u64) -> Result<JobResult, SamplerError> {
        simulated_sampler(job, &self.noise, &self.evolution, self.transverse, self.energy_scale, seed)
    }
}

/// Runs one job: rebuilds the model and path, evolves the initial
/// configuration, and samples `num_reads` readouts with `seed`.
pub fn simulated_sampler(
    job: &AnnealJob,
    noise: &NoiseSpec,
    evolution: &EvolutionConfig,
    transverse: f64,
    energy_scale: f64,
    seed: u64,
) -> Result<JobResult, SamplerError> {
    let params = job_model_params(job, transverse, energy_scale)?;
    let path = job.path()?;
    let initial = job.initial_configuration()?;
    let sim = |e: String| SamplerError::Simulation(e);
    let evolver = Evolver::new(&params, noise, evolution).map_err(|e| sim(e.to_string()))?;
    let counts = simulate_and_sample(
        &evolver,
        SimState::prepare(&initial, noise),
        &path.segments(),
        job.num_reads,
        seed,
    )?;
    Ok(JobResult::completed(format!("sim-{seed:016x}"), &counts))
}
