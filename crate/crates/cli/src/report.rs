//! Machine-readable run reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;

/// A numeric assertion together with the tolerance it was judged against.
#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value.is_finite() && value <= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input_sha256: Option<String>,
    pub config: Option<ConfigFile>,
    pub seed: u64,
    pub elapsed_seconds: f64,
    pub exit_code: i32,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    pub result: T,
}

pub struct ReportBuilder {
    command: &'static str,
    input_sha256: Option<String>,
    config: Option<ConfigFile>,
    seed: u64,
    started: Instant,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl ReportBuilder {
    pub fn new(command: &'static str, config: Option<(&ConfigFile, &[u8])>, seed: u64) -> Self {
        Self {
            command,
            input_sha256: config.map(|(_, b)| sha256_hex(b)),
            config: config.map(|(c, _)| c.clone()),
            seed,
            started: Instant::now(),
            assertions: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn finish<T: Serialize>(self, exit_code: i32, result: T) -> RunReport<T> {
        RunReport {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            input_sha256: self.input_sha256,
            config: self.config,
            seed: self.seed,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            exit_code,
            assertions: self.assertions,
            warnings: self.warnings,
            result,
        }
    }
}

/// Writes pretty JSON with non-finite numbers mapped to null.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes an RFC 4180 CSV file with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip representation; empty for missing values.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        String::new()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
