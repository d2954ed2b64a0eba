//! CSV artifacts and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest round-trip decimal, so equal values always print the same bytes.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to repeat a run: inputs by hash, seeds, constants,
/// parameters and the digests of what was written.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: BTreeMap<String, InputRecord>,
    pub seeds: BTreeMap<String, u64>,
    pub constants: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub outputs: BTreeMap<String, String>,
}

/// Collects artifacts for one command and writes them under `dir`.
pub struct Run {
    dir: PathBuf,
    manifest: Manifest,
}

impl Run {
    pub fn new(dir: &Path, command: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                tool: "ising-conc",
                version: env!("CARGO_PKG_VERSION"),
                command: command.into(),
                inputs: BTreeMap::new(),
                seeds: BTreeMap::new(),
                constants: BTreeMap::new(),
                parameters: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
        })
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, role: &str, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("{role} file {}: cannot read", path.display()))?;
        self.manifest.inputs.insert(
            role.into(),
            InputRecord {
                path: path.display().to_string(),
                sha256: sha256_hex(&bytes),
            },
        );
        String::from_utf8(bytes).with_context(|| format!("{role} file {}: not UTF-8", path.display()))
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.manifest.seeds.insert(name.into(), value);
    }

    pub fn constants(&mut self, values: &BTreeMap<String, f64>) {
        self.manifest
            .constants
            .extend(values.iter().map(|(k, v)| (k.clone(), *v)));
    }

    pub fn param(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.manifest.parameters.insert(name.into(), v);
    }

    /// Writes a CSV with the given header and rows.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().context("flushing CSV")?;
        let path = self.dir.join(name);
        fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.manifest.outputs.insert(name.into(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
