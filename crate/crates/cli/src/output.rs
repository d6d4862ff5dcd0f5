//! Run directory: `config.resolved`, per-artifact CSVs and `report.json`.
//! Every file is written to a temporary sibling and renamed into place, and
//! the report goes last, so a directory with a report is a complete run.

use crate::config::RunConfig;
use crate::CliError;
use serde::Serialize;
use siscatter::event_sim::RNG_ALGORITHM;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const REPORT_SCHEMA: &str = "siscatter-report/1";
pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.resolved";

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io_error(path, e)
    })
}

#[derive(Serialize)]
struct Report<'a> {
    schema: &'static str,
    command: &'a str,
    version: &'static str,
    rng: &'static str,
    seed: u64,
    config: &'a RunConfig,
    files: &'a [String],
    results: serde_json::Value,
    wall_clock: WallClock,
}

#[derive(Serialize)]
struct WallClock {
    started_unix_s: f64,
    elapsed_s: f64,
}

pub struct RunOutput {
    dir: PathBuf,
    command: &'static str,
    config: RunConfig,
    files: Vec<String>,
    started: SystemTime,
    clock: Instant,
}

impl RunOutput {
    pub fn create(dir: &Path, command: &'static str, config: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let mut out = Self {
            dir: dir.to_owned(),
            command,
            config: config.clone(),
            files: Vec::new(),
            started: SystemTime::now(),
            clock: Instant::now(),
        };
        out.write(CONFIG_FILE, config.to_toml().as_bytes())?;
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(name.to_owned());
        Ok(())
    }

    /// Serializes `rows` with a header taken from the row type.
    pub fn write_csv<S: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = S>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    /// Writes through a core exporter that takes an `io::Write`.
    pub fn write_with<E: std::fmt::Display>(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write(name, &buf)
    }

    pub fn finish(mut self, results: serde_json::Value) -> Result<(), CliError> {
        let mut files = self.files.clone();
        files.push(REPORT_FILE.into());
        let report = Report {
            schema: REPORT_SCHEMA,
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            rng: RNG_ALGORITHM,
            seed: self.config.simulation.seed,
            config: &self.config,
            files: &files,
            results,
            wall_clock: WallClock {
                started_unix_s: self.started.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64()),
                elapsed_s: self.clock.elapsed().as_secs_f64(),
            },
        };
        let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.dir.join(REPORT_FILE), text.as_bytes())?;
        self.files = files;
        Ok(())
    }
}
