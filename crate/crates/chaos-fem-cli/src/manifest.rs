//! Run manifests: every invocation writes `manifest.toml` next to its CSV
//! artifacts so each emitted row traces back to the resolved configuration,
//! the seeds, and the wall-clock cost of the cell that produced it.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::FileConfig;
use crate::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub config: &'a FileConfig,
    pub cells: Vec<CellRecord>,
}

#[derive(Debug, Serialize)]
pub struct CellRecord {
    pub case: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    pub samples: usize,
    /// Absent when the cell's samples did not come from a seeded draw.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cg_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub output: String,
}

impl<'a> RunManifest<'a> {
    pub fn new(command: &'static str, config: &'a FileConfig, seeds: Vec<u64>) -> Self {
        Self {
            tool: "chaos-fem",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seeds,
            outputs: Vec::new(),
            config,
            cells: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("cannot serialize manifest: {e}")))?;
        fs::write(dir.join("manifest.toml"), text)
            .map_err(|e| CliError::Config(format!("cannot write manifest.toml: {e}")))?;
        Ok(())
    }
}
