//! Run configuration: one strict JSON document with the sections `model`,
//! `schedule`, `noise`, `experiment` and `backend`.

use std::path::Path;
use std::time::Duration;

use qalab_client::ClientConfig;
use qalab_core::dynamics::EvolutionConfig;
use qalab_core::experiment::{ExperimentConfig, SamplerKind, ScheduleTemplate, DEFAULT_SHOTS};
use qalab_core::model::{ModelParams, RqaSchedule};
use qalab_core::noise::NoiseSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    FullyConnected,
    SingleQubit,
}

impl Preset {
    pub fn params(self) -> ModelParams {
        match self {
            Preset::FullyConnected => ModelParams::fully_connected(),
            Preset::SingleQubit => ModelParams::single_qubit(),
        }
    }
}

/// A preset, a full parameter set, or a preset with overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitudinal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transverse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_scale: Option<f64>,
}

impl ModelSection {
    pub fn preset(p: Preset) -> Self {
        Self {
            preset: Some(p),
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> Result<ModelParams, CliError> {
        let base = match self.preset {
            Some(p) => p.params(),
            None => {
                let missing: Vec<&str> = [
                    ("n_qubits", self.n_qubits.is_none()),
                    ("coupling", self.coupling.is_none()),
                    ("longitudinal", self.longitudinal.is_none()),
                    ("transverse", self.transverse.is_none()),
                ]
                .iter()
                .filter(|(_, m)| *m)
                .map(|(k, _)| *k)
                .collect();
                if !missing.is_empty() {
                    return Err(CliError::Config(format!(
                        "model: without a preset, {} must be given",
                        missing.join(", ")
                    )));
                }
                ModelParams::fully_connected()
            }
        };
        let params = ModelParams {
            n_qubits: self.n_qubits.unwrap_or(base.n_qubits),
            coupling: self.coupling.unwrap_or(base.coupling),
            longitudinal: self.longitudinal.unwrap_or(base.longitudinal),
            transverse: self.transverse.unwrap_or(base.transverse),
            energy_scale: self.energy_scale.unwrap_or(base.energy_scale),
        };
        params.validate().map_err(|e| CliError::Config(format!("model: {e}")))?;
        Ok(params)
    }
}

/// Either explicit values or `points` evenly spaced values from `start` to
/// `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Linspace { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Grid::Values(v) => v.clone(),
            Grid::Linspace { start, stop, points } => {
                if *points < 2 || !(start.is_finite() && stop.is_finite()) {
                    return Err(CliError::Config("linspace needs ≥ 2 points and finite ends".into()));
                }
                let n = *points - 1;
                (0..=n).map(|i| start + (stop - start) * i as f64 / n as f64).collect()
            }
        };
        if v.is_empty() {
            return Err(CliError::Config("grid is empty".into()));
        }
        Ok(v)
    }
}

fn default_hd_grid() -> Grid {
    Grid::Linspace {
        start: 0.3,
        stop: 1.0,
        points: 71,
    }
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default = "one")]
    pub t1_us: f64,
    #[serde(default = "one")]
    pub t3_us: f64,
    #[serde(default = "half")]
    pub h_d: f64,
    /// Hold time for single-hold commands (`entropy`, `sweep --mode survival`).
    #[serde(default)]
    pub t2_us: f64,
    /// Hold times for T1 experiments; omitted means an automatic grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_grid_us: Option<Vec<f64>>,
    /// Hold points for `spectrum` and `sweep`.
    #[serde(default = "default_hd_grid")]
    pub hd_grid: Grid,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            t1_us: 1.0,
            t3_us: 1.0,
            h_d: 0.5,
            t2_us: 0.0,
            t2_grid_us: None,
            hd_grid: default_hd_grid(),
        }
    }
}

impl ScheduleSection {
    pub fn template(&self) -> ScheduleTemplate {
        ScheduleTemplate::new(self.t1_us, self.t3_us, self.h_d)
    }

    pub fn single_hold(&self) -> Result<RqaSchedule, CliError> {
        RqaSchedule::new(self.t1_us, self.t2_us, self.t3_us, self.h_d).map_err(|e| CliError::Config(format!("schedule: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 1e-1,
            per_decade: 10,
        }
    }
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn default_entropy_points() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    /// Time samples for `entropy`, spanning the whole protocol.
    #[serde(default = "default_entropy_points")]
    pub entropy_points: usize,
    /// `λ = 1 − k` grid for `perturb-check`.
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            seed: 0,
            threads: None,
            evolution: EvolutionConfig::default(),
            entropy_points: default_entropy_points(),
            lambda_grid: LambdaGrid::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// In-process simulation.
    #[default]
    Simulated,
    /// REST endpoint from `endpoint` or `QALAB_ENDPOINT`.
    Remote,
    /// REST round trip through a local mock server started for the run.
    Mock,
}

fn default_in_flight() -> usize {
    qalab_client::DEFAULT_MAX_IN_FLIGHT
}

fn default_poll_timeout() -> f64 {
    600.0
}

fn default_request_timeout() -> f64 {
    30.0
}

/// The token is read from `QALAB_TOKEN` only, so it never lands in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_poll_timeout")]
    pub poll_timeout_s: f64,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_s: f64,
}

impl Default for BackendSection {
    fn default() -> Self {
        Self {
            kind: BackendKind::Simulated,
            endpoint: None,
            max_in_flight: default_in_flight(),
            poll_timeout_s: default_poll_timeout(),
            request_timeout_s: default_request_timeout(),
        }
    }
}

impl BackendSection {
    /// Client settings; `endpoint` overrides the config, which overrides the
    /// environment.
    pub fn client_config(&self, endpoint: Option<&str>) -> Result<ClientConfig, CliError> {
        let mut cfg = match endpoint.or(self.endpoint.as_deref()) {
            Some(e) => {
                let mut c = ClientConfig::new(e);
                c.token = std::env::var(qalab_client::TOKEN_ENV).ok().filter(|t| !t.is_empty());
                c
            }
            None => ClientConfig::from_env().map_err(|e| CliError::Config(e.to_string()))?,
        };
        cfg.max_in_flight = self.max_in_flight;
        cfg.poll_timeout = Duration::from_secs_f64(self.poll_timeout_s);
        cfg.request_timeout = Duration::from_secs_f64(self.request_timeout_s);
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.max_in_flight == 0 {
            return Err(CliError::Config("backend: max_in_flight must be ≥ 1".into()));
        }
        for (name, v) in [("poll_timeout_s", self.poll_timeout_s), ("request_timeout_s", self.request_timeout_s)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("backend: {name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub backend: BackendSection,
}

impl Config {
    pub fn new(preset: Preset) -> Self {
        Self {
            model: ModelSection::preset(preset),
            schedule: ScheduleSection::default(),
            noise: NoiseSpec::default(),
            experiment: ExperimentSection::default(),
            backend: BackendSection::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, or the config snapshot inside a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg = if value.get(crate::manifest::MANIFEST_MARKER).is_some() {
            crate::manifest::RunManifest::from_json(&text)?.config
        } else {
            Config::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.resolve()?;
        self.schedule.hd_grid.values()?;
        self.backend.validate()?;
        if self.experiment.entropy_points < 2 {
            return Err(CliError::Config("experiment: entropy_points must be ≥ 2".into()));
        }
        self.experiment_config()?
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        self.model.resolve()
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = ExperimentConfig::new(self.params()?, self.schedule.template(), self.noise);
        cfg.t2_grid = self.schedule.t2_grid_us.clone();
        cfg.shots = self.experiment.shots;
        cfg.seed = self.experiment.seed;
        cfg.threads = self.experiment.threads;
        cfg.evolution = self.experiment.evolution;
        cfg.sampler = match self.backend.kind {
            BackendKind::Simulated => SamplerKind::Simulated,
            BackendKind::Remote | BackendKind::Mock => SamplerKind::Remote,
        };
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = Config::from_json(r#"{"model":{"preset":"fully_connected"}}"#).unwrap();
        assert_eq!(cfg, Config::new(Preset::FullyConnected));
        assert_eq!(cfg.params().unwrap(), ModelParams::fully_connected());
    }

    #[test]
    fn unknown_keys_rejected_in_every_section() {
        for bad in [
            r#"{"model":{"preset":"single_qubit"},"extra":1}"#,
            r#"{"model":{"preset":"single_qubit","j":1}}"#,
            r#"{"model":{"preset":"single_qubit"},"schedule":{"hd":0.5}}"#,
            r#"{"model":{"preset":"single_qubit"},"noise":{"rates":0.1}}"#,
            r#"{"model":{"preset":"single_qubit"},"experiment":{"shot":5}}"#,
            r#"{"model":{"preset":"single_qubit"},"backend":{"url":"x"}}"#,
        ] {
            assert!(Config::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn explicit_model_needs_all_fields() {
        let err = Config::from_json(r#"{"model":{"n_qubits":2,"coupling":1}}"#).unwrap_err();
        assert!(err.to_string().contains("longitudinal"), "{err}");
        let cfg = Config::from_json(
            r#"{"model":{"n_qubits":2,"coupling":0.5,"longitudinal":1,"transverse":2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.params().unwrap().transverse, 2.0);
        let over = Config::from_json(r#"{"model":{"preset":"fully_connected","coupling":2}}"#).unwrap();
        assert_eq!(over.params().unwrap().coupling, 2.0);
        assert_eq!(over.params().unwrap().n_qubits, 4);
    }

    #[test]
    fn grids() {
        let g = Grid::Linspace {
            start: 0.5,
            stop: 1.0,
            points: 3,
        };
        assert_eq!(g.values().unwrap(), vec![0.5, 0.75, 1.0]);
        let parsed: Grid = serde_json::from_str("[0.1, 0.2]").unwrap();
        assert_eq!(parsed, Grid::Values(vec![0.1, 0.2]));
        assert!(Grid::Values(vec![]).values().is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let mut cfg = Config::new(Preset::SingleQubit);
        cfg.schedule.t2_grid_us = Some(vec![0.0, 1.0, 2.0]);
        cfg.experiment.threads = Some(2);
        assert_eq!(Config::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in [
            r#"{"model":{"preset":"fully_connected"},"schedule":{"h_d":1.5}}"#,
            r#"{"model":{"preset":"fully_connected"},"experiment":{"shots":0}}"#,
            r#"{"model":{"preset":"fully_connected"},"schedule":{"t2_grid_us":[2,1]}}"#,
            r#"{"model":{"preset":"fully_connected"},"backend":{"max_in_flight":0}}"#,
            r#"{"model":{"preset":"fully_connected","n_qubits":0}}"#,
        ] {
            assert!(matches!(Config::from_json(bad), Err(CliError::Config(_))), "{bad}");
        }
    }
}
