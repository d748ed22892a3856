//! One function per subcommand. Each returns the files it wrote; tables use
//! `\n` line endings and 17 significant digits.

use std::fmt::Write as _;
use std::path::PathBuf;

use qalab_client::mock::{MockOptions, MockServer};
use qalab_client::RemoteSampler;
use qalab_core::annealer::{to_anneal_job, JobResult, Sampler, SimulatedSampler};
use qalab_core::experiment::{
    fit_exponential, fmt_f64, run_t1_experiment, sweep_hd, sweep_t1_vs_hd, Backend, ExperimentConfig,
};
use qalab_core::model::{HamiltonianTerms, ModelParams};
use qalab_core::operators::{eigensystem, pauli, PauliAxis};
use qalab_core::spectral::{
    entropy_along_schedule, ground_excited_elements, log_spaced, transition_matrix_element, ScalingModel,
};
use rayon::prelude::*;

use crate::config::{BackendKind, Config};
use crate::manifest::write_atomic;
use crate::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Where a command's results go and what it has written so far.
pub struct Outputs {
    dir: Option<PathBuf>,
    file: Option<PathBuf>,
    pub written: Vec<PathBuf>,
}

impl Outputs {
    /// A single-table command writing to `file`, or stdout when `None`.
    pub fn file(file: Option<PathBuf>) -> Self {
        Self {
            dir: None,
            file,
            written: Vec::new(),
        }
    }

    pub fn dir(dir: PathBuf) -> Self {
        Self {
            dir: Some(dir),
            file: None,
            written: Vec::new(),
        }
    }

    pub fn manifest_path(&self) -> Option<PathBuf> {
        if let Some(d) = &self.dir {
            return Some(d.join("manifest.json"));
        }
        self.file.as_ref().map(|f| {
            let mut name = f.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            f.with_file_name(name)
        })
    }

    fn table(&mut self, contents: &str) -> Result<(), CliError> {
        match &self.file {
            Some(f) => {
                write_atomic(f, contents.as_bytes())?;
                self.written.push(f.clone());
            }
            None => print!("{contents}"),
        }
        Ok(())
    }

    fn named(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let dir = self.dir.as_ref().expect("directory output");
        let p = dir.join(name);
        write_atomic(&p, contents.as_bytes())?;
        self.written.push(p);
        Ok(())
    }
}

/// Keeps a mock server alive for as long as its client is in use.
enum BackendHandle {
    InProcess,
    Remote(RemoteSampler),
    Mock { client: RemoteSampler, _server: MockServer },
}

impl BackendHandle {
    fn new(cfg: &Config, exp: &ExperimentConfig, endpoint: Option<&str>) -> Result<Self, CliError> {
        match cfg.backend.kind {
            BackendKind::Simulated if endpoint.is_none() => Ok(Self::InProcess),
            BackendKind::Simulated | BackendKind::Remote => {
                let client = RemoteSampler::new(cfg.backend.client_config(endpoint)?).map_err(runtime)?;
                Ok(Self::Remote(client))
            }
            BackendKind::Mock => {
                let opts = MockOptions {
                    base_seed: exp.seed,
                    ..MockOptions::default()
                };
                let server = MockServer::start(SimulatedSampler::for_experiment(exp), opts).map_err(runtime)?;
                let mut client_cfg = cfg.backend.client_config(Some(&server.url()))?;
                client_cfg.token = None;
                let client = RemoteSampler::new(client_cfg).map_err(runtime)?;
                Ok(Self::Mock { client, _server: server })
            }
        }
    }

    fn backend(&self) -> Backend<'_> {
        match self {
            Self::InProcess => Backend::InProcess,
            Self::Remote(c) | Self::Mock { client: c, .. } => Backend::Sampler(c),
        }
    }

    fn sampler(&self) -> Option<&RemoteSampler> {
        match self {
            Self::InProcess => None,
            Self::Remote(c) | Self::Mock { client: c, .. } => Some(c),
        }
    }
}

/// `h_d,gap,transition_element_z` over the configured hold-point grid.
pub fn spectrum(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.params()?;
    let grid = cfg.schedule.hd_grid.values()?;
    if let Some(bad) = grid.iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
        return Err(CliError::Config(format!("schedule.hd_grid: {bad} outside (0, 1]")));
    }
    let terms = HamiltonianTerms::new(&params).map_err(runtime)?;
    let op = pauli(PauliAxis::Z, 1, params.n_qubits).map_err(runtime)?;
    let rows = grid
        .par_iter()
        .map(|&h_d| {
            let sys = eigensystem(&terms.at(h_d).map_err(runtime)?).map_err(runtime)?;
            let e = sys.energies();
            let elem = transition_matrix_element(&sys, 1, 0, &op).map_err(runtime)?;
            Ok((h_d, e[1] - e[0], elem))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut csv = String::from("h_d,gap,transition_element_z\n");
    for (h_d, gap, elem) in rows {
        let _ = writeln!(csv, "{},{},{}", fmt_f64(h_d), fmt_f64(gap), fmt_f64(elem));
    }
    out.table(&csv)
}

/// Instantaneous first-excited-state entropy along the single-hold protocol.
pub fn entropy(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.params()?;
    if params.n_qubits < 2 {
        return Err(CliError::Config("entropy needs at least two qubits".into()));
    }
    let schedule = cfg.schedule.single_hold()?;
    let n = cfg.experiment.entropy_points - 1;
    let total = schedule.total_duration();
    let times: Vec<f64> = (0..=n).map(|i| total * i as f64 / n as f64).collect();
    let rows = entropy_along_schedule(&params, &schedule, &times).map_err(runtime)?;
    let mut csv = String::from("t_us,entropy\n");
    for (t, s) in rows {
        let _ = writeln!(csv, "{},{}", fmt_f64(t), fmt_f64(s));
    }
    out.table(&csv)
}

/// Local slopes `d ln y / d ln x`: central differences inside, one-sided at
/// the ends.
fn local_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let slope = |i: usize, j: usize| (ys[j].ln() - ys[i].ln()) / (xs[j].ln() - xs[i].ln());
    (0..n)
        .map(|i| match (i, n) {
            (_, 1) => f64::NAN,
            (0, _) => slope(0, 1),
            (i, n) if i == n - 1 => slope(n - 2, n - 1),
            (i, _) => slope(i - 1, i + 1),
        })
        .collect()
}

/// Ground/first-excited `σ_1^z` elements of `H(1 − λ)` for both presets.
pub fn perturb_check(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let g = cfg.experiment.lambda_grid;
    let lambdas = log_spaced(g.lo, g.hi, g.per_decade).map_err(|e| CliError::Config(e.to_string()))?;
    if lambdas.iter().any(|&l| l >= 1.0) {
        return Err(CliError::Config("experiment.lambda_grid must stay below 1".into()));
    }
    let elements = |p: ModelParams| {
        ground_excited_elements(ScalingModel::Annealing, &p, PauliAxis::Z, &lambdas).map_err(runtime)
    };
    let e4 = elements(ModelParams::fully_connected())?;
    let e1 = elements(ModelParams::single_qubit())?;
    let (s4, s1) = (local_slopes(&lambdas, &e4), local_slopes(&lambdas, &e1));
    let mut csv = String::from("lambda,elem_4q,elem_1q,slope_4q,slope_1q\n");
    for i in 0..lambdas.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(lambdas[i]),
            fmt_f64(e4[i]),
            fmt_f64(e1[i]),
            fmt_f64(s4[i]),
            fmt_f64(s1[i])
        );
    }
    out.table(&csv)
}

/// T1 experiment at the configured hold point: `curve.csv` then `fit.json`.
/// A failed fit leaves the curve in place.
pub fn relax(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let exp = cfg.experiment_config()?;
    let handle = BackendHandle::new(cfg, &exp, None)?;
    let curve = run_t1_experiment(&exp, handle.backend()).map_err(runtime)?;
    out.named("curve.csv", &curve.to_csv())?;
    let fit = fit_exponential(&curve).map_err(|e| CliError::Runtime(format!("fit failed: {e}")))?;
    out.named("fit.json", &(fit.to_json() + "\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepMode {
    /// Survival at one hold time for each `h_d`.
    Survival,
    /// A full T1 fit for each `h_d`.
    T1,
}

pub fn sweep(cfg: &Config, mode: SweepMode, out: &mut Outputs) -> Result<(), CliError> {
    let exp = cfg.experiment_config()?;
    let grid = cfg.schedule.hd_grid.values()?;
    let handle = BackendHandle::new(cfg, &exp, None)?;
    match mode {
        SweepMode::Survival => {
            let rows = sweep_hd(&exp, &grid, cfg.schedule.t2_us, handle.backend()).map_err(runtime)?;
            let mut csv = String::from("h_d,survival\n");
            for (h_d, s) in rows {
                let _ = writeln!(csv, "{},{}", fmt_f64(h_d), fmt_f64(s));
            }
            out.named("survival.csv", &csv)
        }
        SweepMode::T1 => {
            let sweep = sweep_t1_vs_hd(&exp, &grid, handle.backend()).map_err(runtime)?;
            let mut curves = String::from("h_d,t2_us,survival,shots\n");
            let mut table = String::from("h_d,t1_us,t1_stderr_us,a,fit_error\n");
            for p in &sweep.points {
                for s in &p.curve.points {
                    let _ = writeln!(curves, "{},{},{},{}", fmt_f64(p.h_d), fmt_f64(s.t2), fmt_f64(s.survival), s.shots);
                }
                let row = match &p.fit {
                    Ok(f) => format!("{},{},{},", fmt_f64(f.t1), fmt_f64(f.t1_stderr()), fmt_f64(f.a)),
                    Err(e) => format!("nan,nan,nan,\"{}\"", e.to_string().replace('"', "'")),
                };
                let _ = writeln!(table, "{},{row}", fmt_f64(p.h_d));
            }
            out.named("curves.csv", &curves)?;
            out.named("t1_sweep.csv", &table)
        }
    }
}

/// Sends the single-hold job to a REST backend and stores request and
/// result.
pub fn submit(cfg: &Config, endpoint: Option<&str>, out: &mut Outputs) -> Result<JobResult, CliError> {
    let exp = cfg.experiment_config()?;
    let mut remote_cfg = cfg.clone();
    if remote_cfg.backend.kind == BackendKind::Simulated {
        remote_cfg.backend.kind = BackendKind::Remote;
    }
    let handle = BackendHandle::new(&remote_cfg, &exp, endpoint)?;
    let client = handle.sampler().expect("remote backend");
    let job = to_anneal_job(&exp, cfg.schedule.t2_us).map_err(runtime)?;
    out.named("job.json", &(job.to_json() + "\n"))?;
    let result = client.sample(&job, exp.seed).map_err(runtime)?;
    let text = serde_json::to_string(&result).map_err(runtime)?;
    out.named("result.json", &(text + "\n"))?;
    Ok(result)
}
