//! Output bundles: every file is rendered in memory first, then written
//! atomically, so a failed run leaves no partial outputs behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gauss_codazzi::io::{to_json_bytes, write_atomic};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "bundle.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    /// SHA-256 of every input file, keyed by the path as given.
    inputs: &'a BTreeMap<String, String>,
    /// SHA-256 of every file written next to this manifest.
    outputs: BTreeMap<&'a str, String>,
}

#[derive(Debug, Default)]
pub struct Bundle {
    files: BTreeMap<String, Vec<u8>>,
    inputs: BTreeMap<String, String>,
}

impl Bundle {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_owned(), bytes);
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.add(name, to_json_bytes(value)?);
        Ok(())
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Writes all files into `dir`, the manifest last.
    pub fn commit(self, dir: &Path, command: &str, seed: u64, config: &ExperimentConfig) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            inputs: &self.inputs,
            outputs: self.files.iter().map(|(k, v)| (k.as_str(), sha256_hex(v))).collect(),
        };
        let manifest = to_json_bytes(&manifest)?;
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
        }
        write_atomic(&dir.join(MANIFEST), &manifest)?;
        Ok(dir.to_path_buf())
    }
}
