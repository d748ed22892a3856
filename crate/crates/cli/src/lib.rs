//! `qalab`: spectra, relaxation experiments and sweeps for the reverse-anneal
//! T1 model, driven by a JSON config.

pub mod commands;
pub mod config;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::commands::{Outputs, SweepMode};
use crate::config::Config;
use crate::manifest::{unix_now, write_atomic, RunManifest, RunStatus};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qalab", version, about = "Reverse-anneal T1 simulation lab")]
pub struct Cli {
    /// JSON config, or a manifest from an earlier run.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file (spectrum, entropy, perturb-check) or directory (relax,
    /// sweep, submit).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Overrides `experiment.threads`.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Gap and z transition element against h_d.
    Spectrum,
    /// One T1 experiment with an exponential fit.
    Relax,
    /// Survival or T1 against h_d.
    Sweep {
        #[arg(long, value_enum, default_value = "survival")]
        mode: SweepMode,
    },
    /// Entanglement entropy of the first excited state along the protocol.
    Entropy,
    /// Perturbative scaling of ground/excited matrix elements.
    PerturbCheck,
    /// Send the single-hold job to a REST endpoint.
    Submit {
        /// Overrides `backend.endpoint` and `QALAB_ENDPOINT`.
        #[arg(long)]
        endpoint: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Relax => "relax",
            Command::Sweep { mode: SweepMode::Survival } => "sweep-survival",
            Command::Sweep { mode: SweepMode::T1 } => "sweep-t1",
            Command::Entropy => "entropy",
            Command::PerturbCheck => "perturb-check",
            Command::Submit { .. } => "submit",
        }
    }

    fn writes_directory(&self) -> bool {
        matches!(self, Command::Relax | Command::Sweep { .. } | Command::Submit { .. })
    }
}

/// Loads the config and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<Config, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.experiment.threads = Some(threads);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one command; the manifest is written even when the command fails
/// after creating outputs.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    let mut out = if cli.command.writes_directory() {
        let dir = cli
            .out
            .clone()
            .ok_or_else(|| CliError::Config(format!("{} needs --out DIR", cli.command.name())))?;
        Outputs::dir(dir)
    } else {
        Outputs::file(cli.out.clone())
    };
    if let Some(n) = cfg.experiment.threads {
        // Fails only if a pool already exists, which then stays in use.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let started = unix_now();
    let result = match &cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &mut out),
        Command::Relax => commands::relax(&cfg, &mut out),
        Command::Sweep { mode } => commands::sweep(&cfg, *mode, &mut out),
        Command::Entropy => commands::entropy(&cfg, &mut out),
        Command::PerturbCheck => commands::perturb_check(&cfg, &mut out),
        Command::Submit { endpoint } => commands::submit(&cfg, endpoint.as_deref(), &mut out).map(|r| {
            eprintln!("job {} {:?}, {} reads", r.id, r.status, r.total_reads());
        }),
    };

    if let Some(path) = out.manifest_path() {
        if result.is_ok() || !out.written.is_empty() {
            let mut m = RunManifest::new(cli.command.name(), &cfg, started);
            m.finished_unix_s = unix_now();
            m.outputs = out.written.clone();
            if let Err(e) = &result {
                m.status = RunStatus::Failed;
                m.error = Some(e.to_string());
            }
            write_atomic(&path, m.to_json().as_bytes())?;
        }
    }
    result
}
