use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{to_toml, LabConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the effective configuration after overrides.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub command: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

pub fn config_hash(config: &LabConfig) -> String {
    hex::encode(Sha256::digest(to_toml(config).as_bytes()))
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn new(config: &LabConfig, command: &str, started_unix: u64, outputs: Vec<String>) -> Self {
        Self {
            config_hash: config_hash(config),
            seed: config.experiment.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            started_unix,
            finished_unix: unix_now(),
            outputs,
        }
    }

    /// Replaces any previous manifest in `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join(MANIFEST_FILE), json + "\n")
    }
}
