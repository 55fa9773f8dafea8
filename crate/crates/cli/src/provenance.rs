use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Stamp embedded in every output so a result can be traced back to the
/// exact settings that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub stage: String,
    /// SHA-256 of the compact JSON of `config`.
    pub config_hash: String,
    pub config: Value,
    /// Worker cap; not part of the hash since results do not depend on it.
    pub threads: Option<usize>,
}

impl Provenance {
    pub fn new(stage: &str, config: Value, threads: Option<usize>) -> Self {
        let canonical = serde_json::to_string(&config).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            tool: "ctsdf",
            version: env!("CARGO_PKG_VERSION"),
            stage: stage.to_string(),
            config_hash: format!("sha256:{hex}"),
            config,
            threads,
        }
    }

    /// Single-line JSON.
    pub fn line(&self) -> String {
        serde_json::to_string(self).expect("provenance serialises")
    }
}
