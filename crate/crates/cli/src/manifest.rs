use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub tool_version: String,
    /// Fully resolved settings of the run.
    pub config: Value,
    pub config_hash: String,
    pub seed: u64,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    /// Wall-clock milliseconds per phase.
    pub timings: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn artifact(path: &Path) -> Result<Artifact, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(Artifact {
        path: path.display().to_string(),
        bytes: bytes.len() as u64,
        sha256: sha256_hex(&bytes),
    })
}

/// Collects outputs and timings for one command, then writes the manifest.
pub struct Run {
    command: &'static str,
    out: PathBuf,
    started: Instant,
    phase: Instant,
    inputs: Vec<Artifact>,
    outputs: Vec<Artifact>,
    timings: BTreeMap<String, f64>,
    warnings: Vec<String>,
}

impl Run {
    pub fn start(command: &'static str, out: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let now = Instant::now();
        Ok(Run {
            command,
            out: out.to_path_buf(),
            started: now,
            phase: now,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(artifact(path)?);
        Ok(())
    }

    pub fn warn(&mut self, message: String) {
        self.warnings.push(message);
    }

    pub fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.timings
            .insert(name.to_owned(), now.duration_since(self.phase).as_secs_f64() * 1e3);
        self.phase = now;
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let bytes = bytes.as_ref();
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(Artifact {
            path: path.display().to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text)
    }

    /// Registers a file some other writer already produced.
    pub fn adopt(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        self.outputs.push(artifact(&path)?);
        Ok(path)
    }

    pub fn finish(mut self, config: Value, seed: u64) -> Result<RunManifest, CliError> {
        self.timings
            .insert("total".into(), self.started.elapsed().as_secs_f64() * 1e3);
        let canonical = serde_json::to_string(&config).expect("serializable");
        let manifest = RunManifest {
            schema_version: edurec::SCHEMA_VERSION,
            command: self.command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            config_hash: sha256_hex(canonical.as_bytes()),
            config,
            seed,
            inputs: self.inputs,
            outputs: self.outputs,
            timings: self.timings,
            warnings: self.warnings,
        };
        let path = self.out.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
