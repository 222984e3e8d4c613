//! Per-run provenance: the resolved configuration plus content hashes of
//! every file the command read or wrote. Two runs with the same manifest
//! consumed the same bytes and produced the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use emoface::corpus::sha256_hex;
use emoface::{Error, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// SHA-256 of a file's bytes, as lowercase hex.
pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub config: RunConfig,
    /// Path -> content hash, sorted by path.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Result<RunManifest> {
        Ok(RunManifest {
            command: command.to_string(),
            config_sha256: config.sha256()?,
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    /// Writes `run_manifest.json` into the command's output directory.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::data(format!("cannot serialize run manifest: {e}")))?;
        fs::write(dir.join(RUN_MANIFEST_FILE), text + "\n")?;
        Ok(())
    }
}
