use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uav_codesign::moo::write_atomic;
use uav_codesign::uavspec::CoDesignProblem;

use crate::CliError;

/// Everything needed to rerun a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical (re-serialized) problem, one per config.
    pub problem_hashes: Vec<String>,
    pub configs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub budget: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
}

pub fn problem_hash(p: &CoDesignProblem) -> Result<String, CliError> {
    let canonical = p.to_toml()?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, started: DateTime<Utc>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            problem_hashes: Vec::new(),
            configs: Vec::new(),
            seed: None,
            budget: None,
            started_at: timestamp(started),
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }

    pub fn add_problem(&mut self, path: &Path, p: &CoDesignProblem) -> Result<(), CliError> {
        self.problem_hashes.push(problem_hash(p)?);
        self.configs.push(path.to_path_buf());
        Ok(())
    }

    pub fn write(mut self, dir: &Path) -> Result<PathBuf, CliError> {
        self.finished_at = timestamp(Utc::now());
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self)
            .map_err(|e| CliError::Output { path: path.clone(), message: e.to_string() })?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
