//! Run manifests: enough to reproduce every output byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::export::{sha256_hex, OutputRecord, SCHEMA_VERSION};
use crate::{CommandKind, Flags};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: CommandKind,
    pub config_sha256: String,
    /// Full config text, so the manifest alone replays the run.
    pub config: String,
    pub seeds: Vec<u64>,
    pub flags: Flags,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn new(command: CommandKind, config: &str, flags: Flags, seeds: Vec<u64>, outputs: Vec<OutputRecord>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            config_sha256: sha256_hex(config.as_bytes()),
            config: config.to_string(),
            seeds,
            flags,
            outputs,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut b = serde_json::to_vec_pretty(self).map_err(|e| CliError::Serialization(e.to_string()))?;
        b.push(b'\n');
        Ok(b)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        if sha256_hex(m.config.as_bytes()) != m.config_sha256 {
            return Err(CliError::Invariant(format!("{}: config text does not match its hash", path.display())));
        }
        Ok(m)
    }

    /// Output files whose hash differs from `other`'s, by name.
    pub fn mismatches(&self, other: &RunManifest) -> Vec<String> {
        let mut bad: Vec<String> = self
            .outputs
            .iter()
            .filter(|r| !other.outputs.contains(r))
            .map(|r| r.file.clone())
            .collect();
        if self.outputs.len() != other.outputs.len() {
            bad.push(format!("{} files vs {}", self.outputs.len(), other.outputs.len()));
        }
        bad
    }
}
