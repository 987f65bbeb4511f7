//! Run manifests: enough metadata next to every output to re-run the
//! command bit-identically (`crowdscribe rerun <manifest>`).

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    /// Full argument vector, excluding the binary name.
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Snapshot of the effective configuration.
    pub config: serde_json::Value,
    pub wall_time_ms: u128,
}

impl RunManifest {
    pub fn new(command: &str, argv: Vec<String>) -> Self {
        RunManifest {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            argv,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: serde_json::Value::Null,
            wall_time_ms: 0,
        }
    }

    /// Write as pretty JSON next to the primary output.
    pub fn write_alongside(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let name = output
            .file_name()
            .map(|n| format!("{}.manifest.json", n.to_string_lossy()))
            .unwrap_or_else(|| "run.manifest.json".to_string());
        let path = output.with_file_name(name);
        let body = serde_json::to_string_pretty(self)?;
        crowdscribe::dataio::atomic_write(&path, &body)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&body).with_context(|| format!("parsing manifest {}", path.display()))
    }
}
