use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Provenance record written next to every output file. Holds no timestamps
/// or absolute paths, so reruns reproduce it byte for byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub output: String,
    pub input_sha256: String,
    pub seed: Option<u64>,
    pub config: Value,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Context shared by all outputs of one command.
pub struct Run {
    pub command: &'static str,
    pub input_sha256: String,
    pub seed: Option<u64>,
    pub config: Value,
}

impl Run {
    /// Writes `bytes` to `out` and its manifest to `<out>.manifest.json`.
    pub fn emit(&self, out: &Path, bytes: &[u8]) -> CliResult<()> {
        write_file(out, bytes)?;
        let manifest = RunManifest {
            command: self.command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            output: out
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            input_sha256: self.input_sha256.clone(),
            seed: self.seed,
            config: self.config.clone(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest).map_err(risk_core::RiskError::from)?;
        json.push(b'\n');
        write_file(&manifest_path(out), &json)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}
