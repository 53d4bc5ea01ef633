//! Run manifests: everything needed to reproduce an invocation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Written alongside every subcommand's outputs. Re-running the recorded
/// subcommand with the recorded config and seed on inputs with matching
/// digests reproduces the outputs byte for byte.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub seed: u64,
    pub jobs: usize,
    /// Fully resolved configuration, defaults materialized.
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, jobs: usize, config: serde_json::Value) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed,
            jobs,
            config,
            inputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex });
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<PathBuf> {
        let path = out_dir.join(format!("manifest-{}.json", self.subcommand));
        let text = serde_json::to_string_pretty(self).expect("manifest always encodes");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
