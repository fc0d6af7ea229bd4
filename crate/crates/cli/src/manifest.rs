use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use derma_core::io::file_sha256;
use derma_core::synth::{content_hash, write_json};
use serde::Serialize;

use crate::error::CliResult;

#[derive(Debug, Clone, Serialize)]
pub struct HashedPath {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of one command run. Stored next to the outputs; never hashed
/// into dataset content hashes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    /// Dataset directory and its content hash.
    pub dataset: Option<HashedPath>,
    pub inputs: Vec<HashedPath>,
    pub outputs: Vec<HashedPath>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub struct ManifestBuilder {
    manifest: RunManifest,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &impl Serialize, seed: Option<u64>) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
                seed,
                dataset: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_at: now(),
                finished_at: String::new(),
            },
        }
    }

    pub fn dataset(&mut self, root: &Path) -> CliResult<()> {
        self.manifest.dataset = Some(HashedPath {
            path: root.to_path_buf(),
            sha256: content_hash(root)?,
        });
        Ok(())
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.manifest.inputs.push(HashedPath {
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> CliResult<()> {
        self.manifest.outputs.push(HashedPath {
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
        });
        Ok(())
    }

    pub fn write(mut self, path: &Path) -> CliResult<RunManifest> {
        self.manifest.finished_at = now();
        write_json(path, &self.manifest)?;
        Ok(self.manifest)
    }
}

/// `dir/model.json` → `dir/model.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn manifest_path(output: &Path) -> PathBuf {
    sibling(output, "manifest.json")
}
