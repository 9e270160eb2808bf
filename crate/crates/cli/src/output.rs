//! CSV tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use sha2::{Digest, Sha256};
use smed_core::montecarlo::ErrorRateRecord;

use crate::config::Config;
use crate::CliError;

pub const RECORD_HEADER: [&str; 14] = [
    "source",
    "detector",
    "snr_db",
    "n_t",
    "n_r",
    "m_order",
    "trials",
    "symbol_errors",
    "antenna_errors",
    "overall_errors",
    "ser",
    "aer",
    "oer",
    "ci95",
];

/// A CSV file assembled in memory so every row can be checksummed.
pub struct Table {
    name: String,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        Ok(Self { name: name.to_string(), writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::Io(format!("{}: {e}", self.name)))
    }

    /// Writes the file into `dir` and returns what the manifest records.
    pub fn save(self, dir: &Path) -> Result<Written, CliError> {
        let name = self.name;
        let bytes = self.writer.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        let path = dir.join(&name);
        fs::write(&path, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8_lossy(&bytes);
        let rows = text.lines().skip(1).map(|l| sha256_hex(l.as_bytes())).collect();
        Ok(Written { name, file_sha256: sha256_hex(&bytes), row_sha256: rows })
    }
}

pub struct Written {
    pub name: String,
    pub file_sha256: String,
    pub row_sha256: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Full round-trip precision; `inf` for an unbounded SNR.
pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn record_row(source: &str, r: &ErrorRateRecord<f64>) -> Vec<String> {
    vec![
        source.to_string(),
        r.detector.name().to_string(),
        num(r.snr_db),
        r.n_t.to_string(),
        r.n_r.to_string(),
        r.order.to_string(),
        r.trials.to_string(),
        r.symbol_errors.to_string(),
        r.antenna_errors.to_string(),
        r.overall_errors.to_string(),
        num(r.ser),
        num(r.aer),
        num(r.oer),
        num(r.ci95_halfwidth),
    ]
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub config_path: &'a Path,
    pub config_sha256: String,
    pub seed_overridden: bool,
    pub workers: usize,
    pub started: DateTime<Utc>,
}

/// `manifest.txt`: run metadata, the effective configuration and the
/// checksums of every file and row written. Passing the manifest back as
/// `--config` repeats the run.
pub fn write_manifest(dir: &Path, info: &RunInfo<'_>, cfg: &Config, files: &[Written]) -> Result<PathBuf, CliError> {
    let stamp = |t: DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Millis, true);
    let mut text = format!(
        "# smed run manifest; `smed {cmd} --config manifest.txt` repeats this run\n\
         [manifest]\ntool = smed {version}\ncommand = {cmd}\nconfig_path = {path}\nconfig_sha256 = {sha}\n\
         master_seed = {seed}\nseed_source = {source}\nworkers = {workers}\nstarted = {started}\nfinished = {finished}\n\n",
        cmd = info.command,
        version = env!("CARGO_PKG_VERSION"),
        path = info.config_path.display(),
        sha = info.config_sha256,
        seed = cfg.run.seed,
        source = if info.seed_overridden { "--seed" } else { "config" },
        workers = info.workers,
        started = stamp(info.started),
        finished = stamp(Utc::now()),
    );
    text.push_str(&cfg.render());
    text.push_str("\n\n[checksums]\n");
    for f in files {
        text.push_str(&format!("{} = {}\n", f.name, f.file_sha256));
        for (k, h) in f.row_sha256.iter().enumerate() {
            text.push_str(&format!("{}:{} = {h}\n", f.name, k + 1));
        }
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
