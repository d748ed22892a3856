//! Run manifests and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::CliError;

/// Top-level key that identifies a manifest when it is passed as `--config`.
pub const MANIFEST_MARKER: &str = "qalab_manifest";
pub const MANIFEST_FORMAT: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub qalab_manifest: u32,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub config: Config,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, config: &Config, started: f64) -> Self {
        Self {
            qalab_manifest: MANIFEST_FORMAT,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.experiment.seed,
            started_unix_s: started,
            finished_unix_s: started,
            status: RunStatus::Completed,
            error: None,
            outputs: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: RunManifest = serde_json::from_str(text).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
        if m.qalab_manifest != MANIFEST_FORMAT {
            return Err(CliError::Config(format!(
                "manifest format {} is not supported",
                m.qalab_manifest
            )));
        }
        Ok(m)
    }
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
