//! Run manifests and atomic artifact writes.
//!
//! Every stage writes its outputs atomically (temp file + rename), then a
//! `manifest.json` recording the command, config snapshot, seeds, and
//! SHA-256 digests of all inputs and outputs. Rerunning a stage with the
//! same inputs and seeds reproduces every artifact byte for byte; only the
//! manifest's `created_at` differs.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage: String,
    pub tool_version: String,
    pub created_at: String,
    pub seeds: BTreeMap<String, u64>,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Write `content` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, content: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp-write");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Collects a stage's artifacts, then seals them under one manifest.
pub struct StageWriter {
    stage: String,
    dir: PathBuf,
    seeds: BTreeMap<String, u64>,
    config_sha256: String,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl StageWriter {
    pub fn new(stage: &str, dir: &Path, config_snapshot: &str) -> Self {
        StageWriter {
            stage: stage.to_string(),
            dir: dir.to_path_buf(),
            seeds: BTreeMap::new(),
            config_sha256: sha256_hex(config_snapshot.as_bytes()),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.seeds.insert(name.to_string(), value);
    }

    /// Record an input artifact; errors if it does not exist, naming the
    /// stage that should have produced it.
    pub fn input(&mut self, path: &Path, producer_stage: &str) -> Result<(), CliError> {
        if !path.exists() {
            return Err(CliError::MissingPrerequisite {
                path: path.display().to_string(),
                stage: producer_stage.to_string(),
            });
        }
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Atomically write one output artifact inside the stage directory.
    pub fn write(&mut self, name: &str, content: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, content)?;
        self.outputs.insert(name.to_string(), sha256_hex(content));
        Ok(path)
    }

    /// Record an output that was written directly (e.g. by the corpus
    /// generator).
    pub fn record_output(&mut self, path: &Path) -> Result<(), CliError> {
        let name = path
            .strip_prefix(&self.dir)
            .unwrap_or(path)
            .display()
            .to_string();
        self.outputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    /// Write `manifest.json` last, sealing the stage.
    pub fn seal(self) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            stage: self.stage,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_at: chrono::Utc::now().to_rfc3339(),
            seeds: self.seeds,
            config_sha256: self.config_sha256,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())?;
        Ok(manifest)
    }
}

/// Verify that a prerequisite file exists, for stages that read artifacts
/// without hashing them up front.
pub fn require(path: &Path, producer_stage: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingPrerequisite {
            path: path.display().to_string(),
            stage: producer_stage.to_string(),
        })
    }
}
