//! Versioned model persistence.
//!
//! Artifacts are structured text (JSON with shortest-round-trip floats),
//! so they diff cleanly and reload bit-exactly. Writes go through a
//! temporary file and an atomic rename.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DataError;
use crate::ensemble::{Ensemble, PipelineSettings};

pub const ARTIFACT_VERSION: &str = "texwet-model/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: String,
    /// Digest of the resolved pipeline settings the model was trained with.
    pub config_digest: String,
    pub settings: PipelineSettings,
    pub ensemble: Ensemble,
}

/// Hex SHA-256 of the canonical settings encoding.
pub fn settings_digest(settings: &PipelineSettings) -> String {
    let encoded = serde_json::to_string(settings).expect("settings always encode");
    let mut hasher = Sha256::new();
    hasher.update(encoded.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl ModelArtifact {
    pub fn new(ensemble: Ensemble, settings: PipelineSettings) -> Self {
        ModelArtifact {
            version: ARTIFACT_VERSION.to_string(),
            config_digest: settings_digest(&settings),
            settings,
            ensemble,
        }
    }
}

pub fn save_model(artifact: &ModelArtifact, path: &Path) -> Result<(), DataError> {
    let encoded = serde_json::to_string_pretty(artifact)
        .map_err(|e| DataError::CorruptArtifact(e.to_string()))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encoded)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelArtifact, DataError> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| DataError::CorruptArtifact(e.to_string()))?;
    let version = value.get("version").and_then(|v| v.as_str()).unwrap_or("<missing>");
    if version != ARTIFACT_VERSION {
        return Err(DataError::VersionMismatch {
            expected: ARTIFACT_VERSION.to_string(),
            got: version.to_string(),
        });
    }
    serde_json::from_value(value).map_err(|e| DataError::CorruptArtifact(e.to_string()))
}
