//! Run manifests: every output is reproducible from its manifest.
//!
//! A manifest records the resolved configuration, the digests of every input
//! file, the seed, the tool version, and the outputs written. Re-running the
//! same subcommand with the same inputs reproduces the outputs byte for
//! byte, so manifests double as provenance and as a determinism check. No
//! timestamps, by design.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    /// input path -> sha256 of its bytes
    pub inputs: BTreeMap<String, String>,
    /// files written, relative to the manifest location
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value) -> RunManifest {
        RunManifest {
            tool: "ruptura",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_owned(),
            seed: None,
            config,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::domain(format!("reading input {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.outputs.push(name);
    }

    /// Write the manifest JSON and return its path.
    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::domain(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::domain(format!("writing manifest: {e}")))?;
        Ok(path.to_owned())
    }
}

/// Manifest location: `manifest.json` inside an output directory.
pub fn manifest_in_dir(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

/// Manifest location: `<stem>.manifest.json` next to a single output file.
pub fn manifest_beside(file: &Path) -> PathBuf {
    let stem = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_owned());
    file.with_file_name(format!("{stem}.manifest.json"))
}
