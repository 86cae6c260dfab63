//! Run manifest: every invocation records its command, parameters, version,
//! wall clock and the digests of the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct OutputEntry {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest {
    command: String,
    parameters: serde_json::Value,
    version: String,
    wall_clock_seconds: f64,
    outputs: Vec<OutputEntry>,
}

/// Collects output files as they are written and finalises `manifest.json`.
pub struct RunManifest {
    out_dir: PathBuf,
    command: String,
    parameters: serde_json::Value,
    started: Instant,
    outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn new(out_dir: &Path, command: &str, parameters: serde_json::Value) -> Result<Self> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            command: command.to_string(),
            parameters,
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    /// Writes a file under the output directory and records its digest.
    pub fn write_file(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        let digest = Sha256::digest(contents.as_bytes());
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: hex::encode(digest),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn finish(self) -> Result<()> {
        let manifest = Manifest {
            command: self.command,
            parameters: self.parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let path = self.out_dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Full-precision decimal formatting: 17 significant digits round-trip f64.
pub fn fmt_f64(value: f64) -> String {
    format!("{value:.16e}")
}
