//! Output files and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct OutputFile {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    timestamp: String,
    parameters: &'a BTreeMap<String, serde_json::Value>,
    outputs: &'a [OutputFile],
}

/// Collects what a command produces. Without an output directory the main
/// table goes to stdout and sidecar files are dropped.
pub struct Output {
    command: &'static str,
    dir: Option<PathBuf>,
    params: BTreeMap<String, serde_json::Value>,
    files: Vec<OutputFile>,
}

impl Output {
    pub fn new(command: &'static str, dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self {
            command,
            dir,
            params: BTreeMap::new(),
            files: Vec::new(),
        })
    }

    pub fn param<T: Serialize>(&mut self, key: &str, value: T) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.params.insert(key.to_string(), v);
    }

    /// Main result: a file under the output directory, or stdout.
    pub fn table(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if self.dir.is_some() {
            self.file(name, bytes)
        } else {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(bytes)?;
            lock.flush()?;
            Ok(())
        }
    }

    /// Sidecar file, written only when an output directory is set.
    pub fn file(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        std::fs::write(dir.join(name), bytes)?;
        self.files.push(OutputFile {
            path: name.to_string(),
            sha256: format!("{:x}", Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.file(name, &bytes)
    }

    /// Writes the manifest listing every file produced by this run.
    pub fn finish(self) -> Result<(), CliError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            parameters: &self.params,
            outputs: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(dir.join(MANIFEST), bytes)?;
        Ok(())
    }
}
