use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ecosim_core::ingest::DATASET_FILES;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the effective parameters. serde_json maps are sorted, so equal
/// parameter sets hash equally regardless of flag order.
pub fn config_hash(params: &serde_json::Value) -> String {
    sha256_hex(params.to_string().as_bytes())
}

/// Hash over the dataset files present in `dir`, in a fixed order.
pub fn dataset_hash(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in DATASET_FILES {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command_line: Vec<String>,
    pub subcommand: String,
    pub config_hash: String,
    pub dataset_hash: Option<String>,
    pub seeds: Vec<u64>,
    /// sha256 of every artifact written, keyed by path (or "stdout").
    pub outputs: BTreeMap<String, String>,
    /// Hash of everything above except the command line; equal across
    /// reruns with equal inputs.
    pub run_hash: String,
    pub wall_time_seconds: f64,
}

/// Files written by a command, remembered with their hashes.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub outputs: BTreeMap<String, String>,
    pub first_path: Option<PathBuf>,
}

impl Artifacts {
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(path.display().to_string(), bytes);
        if self.first_path.is_none() {
            self.first_path = Some(path.to_path_buf());
        }
        Ok(())
    }

    pub fn record(&mut self, name: String, bytes: &[u8]) {
        self.outputs.insert(name, sha256_hex(bytes));
    }
}

pub fn build(
    argv: Vec<String>,
    subcommand: &str,
    config_hash: String,
    dataset_hash: Option<String>,
    seeds: Vec<u64>,
    outputs: BTreeMap<String, String>,
    wall_time_seconds: f64,
) -> RunManifest {
    let identity = serde_json::json!({
        "subcommand": subcommand,
        "config_hash": config_hash,
        "dataset_hash": dataset_hash,
        "seeds": seeds,
        "outputs": outputs,
        "tool_version": env!("CARGO_PKG_VERSION"),
    });
    RunManifest {
        tool: "ecosim",
        tool_version: env!("CARGO_PKG_VERSION"),
        command_line: argv,
        subcommand: subcommand.to_string(),
        run_hash: sha256_hex(identity.to_string().as_bytes()),
        config_hash,
        dataset_hash,
        seeds,
        outputs,
        wall_time_seconds,
    }
}
