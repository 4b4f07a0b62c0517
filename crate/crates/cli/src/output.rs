use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fecg::io::{format_csv, Record};
use serde::Serialize;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// A single signal in the record CSV format, so it loads back as a record.
pub fn write_signal(path: &Path, name: &str, fs: u32, x: &[f64]) -> Result<()> {
    let rec = Record::new(name, fs, vec![name.to_string()], vec![x.to_vec()])?;
    write_text(path, &format_csv(&rec))
}

/// Provenance written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunMeta<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub config: &'a C,
}

impl<'a, C: Serialize> RunMeta<'a, C> {
    pub fn new(command: &'a str, seed: Option<u64>, inputs: Vec<PathBuf>, config: &'a C) -> Self {
        RunMeta {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            inputs,
            config,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("run_meta.json"), self)
    }
}
