//! Experiment configuration: a flat, versioned JSON document that fully
//! determines a run (physics parameters, task, seed, tolerances), plus the
//! report envelope every task embeds its result in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::Dipole;
use crate::error::{Result, SymtopError};
use crate::spectrum::Inertia;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InertiaConfig {
    pub i2: f64,
    pub i3: f64,
    #[serde(default = "default_true")]
    pub resonance_exact: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleConfig {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rank: f64,
    pub closure: f64,
    pub unitarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: 1e-8, closure: 1e-9, unitarity: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    VerifyQuantum,
    VerifyClassical,
    Simulate,
    RestrictedSk,
    ThreeWave,
    ResonanceReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub inertia: InertiaConfig,
    pub dipole: DipoleConfig,
    pub j_max: u32,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub task: TaskKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Fixed k for the restricted check and the three-wave demo.
    #[serde(default)]
    pub k: Option<i32>,
    /// Level / magnetic quantum numbers for the three-wave demo.
    #[serde(default)]
    pub j: Option<u32>,
    #[serde(default)]
    pub m: Option<i32>,
    /// Simulation horizon and step for the classical trajectory task.
    #[serde(default)]
    pub total_time: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| SymtopError::Config(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(SymtopError::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        if !(self.inertia.i2 > 0.0 && self.inertia.i3 > 0.0) {
            return Err(SymtopError::Config("moments of inertia must be positive".into()));
        }
        if self.j_max < 1 {
            return Err(SymtopError::Config("j_max must be at least 1".into()));
        }
        // Dipole validity (nonzero) is checked where a Dipole is built.
        Ok(())
    }

    pub fn inertia(&self) -> Inertia {
        Inertia::new(self.inertia.i2, self.inertia.i3, self.inertia.resonance_exact)
    }

    pub fn dipole(&self) -> Result<Dipole> {
        Dipole::new(self.dipole.delta1, self.dipole.delta2, self.dipole.delta3)
    }

    /// SHA-256 of the canonical JSON serialization of the config.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canon.as_bytes());
        hex(&hasher.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Envelope written for every task: provenance plus the task result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub toolkit_version: String,
    pub schema: u32,
    pub config_sha256: String,
    pub task: TaskKind,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub result: serde_json::Value,
}

impl Report {
    pub fn new(config: &ExperimentConfig, result: serde_json::Value) -> Self {
        Self {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            schema: SCHEMA_VERSION,
            config_sha256: config.hash(),
            task: config.task,
            seed: config.seed,
            tolerances: config.tolerances.clone(),
            result,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
