use helixseek_core::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the canonical JSON of the effective config.
    pub config_sha256: String,
    pub version: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunManifest {
    pub fn new(config: &RunConfig, outputs: Vec<String>, wall_clock_s: f64) -> Self {
        Self {
            config_sha256: sha256_hex(config.to_canonical_json().as_bytes()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.noise.seed,
            outputs,
            wall_clock_s,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
