//! Run manifests: what ran, with which inputs, and what it wrote.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::io::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_path: Option<String>,
    /// SHA-256 of the config text the run used.
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub workers: usize,
    pub wall_time: f64,
    pub output_paths: Vec<PathBuf>,
    /// Free-form notes on estimator choices, e.g. the interval method.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: impl Into<String>) -> Self {
        RunManifest {
            command: command.into(),
            args: Vec::new(),
            config_path: None,
            config_hash: None,
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            workers: 1,
            wall_time: 0.0,
            output_paths: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_config(mut self, path: impl Into<String>, text: &str) -> Self {
        self.config_path = Some(path.into());
        self.config_hash = Some(sha256_hex(text.as_bytes()));
        self
    }

    pub fn finish(&mut self, elapsed: Duration) {
        self.wall_time = elapsed.as_secs_f64();
    }

    /// Writes the manifest as pretty JSON, atomically.
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(path, json.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn written_manifest_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("simulate").with_config("45GHz", "schema = 1");
        m.seed = Some(7);
        m.output_paths.push("counts.csv".into());
        m.finish(Duration::from_millis(1500));
        let path = dir.path().join("manifest.json");
        m.write(&path).unwrap();
        let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.wall_time, 1.5);
    }
}
