//! Run manifests: everything needed to rerun a command, plus what it
//! produced.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cli::config::FitSettings;
use crate::error::{MnpError, Result};
use crate::experiments::SimStudyConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

/// The command and its fully resolved settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandSpec {
    Simulate {
        config: SimStudyConfig,
    },
    Fit {
        data: PathBuf,
        settings: FitSettings,
    },
    Diagnose {
        draws: PathBuf,
        fit_manifest: Option<PathBuf>,
        max_lag: usize,
    },
    Compare {
        draws_a: PathBuf,
        draws_b: PathBuf,
    },
}

impl CommandSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CommandSpec::Simulate { .. } => "simulate",
            CommandSpec::Fit { .. } => "fit",
            CommandSpec::Diagnose { .. } => "diagnose",
            CommandSpec::Compare { .. } => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Input role (`data`, `config`, ...) or output file name.
    pub name: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Per-chain counters of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain: usize,
    pub file: String,
    pub retained: usize,
    pub total_iterations: usize,
    pub total_rejections: u64,
    pub total_violations: usize,
    pub violation_fraction: f64,
    pub acceptance_rate: f64,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub spec: CommandSpec,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chains: Vec<ChainRecord>,
}

impl RunManifest {
    pub fn new(spec: CommandSpec) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            chains: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| MnpError::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| MnpError::Schema {
            path: path.display().to_string(),
            message: format!("not a run manifest: {e}"),
        })
    }

    pub fn chain_for_file(&self, file: &str) -> Option<&ChainRecord> {
        self.chains.iter().find(|c| c.file == file)
    }
}
