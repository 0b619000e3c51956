//! The `manifest.json` written next to every command's outputs: tool
//! version, command line, effective config, and a checksum per input and
//! output file. No timestamps, so an unchanged rerun reproduces it byte for
//! byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use prodspace::cache::{sha256_hex, to_pretty_json, write_if_changed};

use crate::config::RunConfig;

pub const TOOL: &str = concat!("prodspace ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub config: RunConfig,
    /// Files the command read, keyed by path as used.
    pub inputs: BTreeMap<String, String>,
    /// Files the command wrote under the output directory, keyed by name.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Manifest {
        Manifest {
            tool: TOOL.to_string(),
            command: command.to_string(),
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    /// Record an input file by checksumming it off disk.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading input {} for the manifest", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Write one output file under `dir` and record its checksum.
    pub fn output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = dir.join(name);
        write_if_changed(&path, bytes)
            .with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    /// Write the manifest itself. Call last; the manifest never lists itself.
    pub fn finish(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        write_if_changed(&path, &to_pretty_json(self)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
