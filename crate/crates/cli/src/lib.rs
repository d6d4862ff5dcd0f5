//! `siscatter` command-line driver: one run per invocation, configured by a
//! TOML file plus `--set` overrides, written to its own output directory.

// `!(x > 0.0)` is deliberate: it rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod commands;
pub mod config;
pub mod output;

use clap::{Args, Parser, Subcommand};
use config::{FitModelName, RunConfig};
use std::ffi::OsString;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// bad configuration, arguments or input data
    #[error("{0}")]
    Config(String),
    /// a model, simulation or fit failed on valid input
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<siscatter::ModelError> for CliError {
    fn from(e: siscatter::ModelError) -> Self {
        match e {
            siscatter::ModelError::InvalidParameter { .. } | siscatter::ModelError::Spectrum(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<siscatter::event_sim::SimError> for CliError {
    fn from(e: siscatter::event_sim::SimError) -> Self {
        use siscatter::event_sim::SimError;
        match e {
            SimError::Config(_) | SimError::Spectrum(_) | SimError::Csv(_) | SimError::Io(_) => {
                CliError::Config(e.to_string())
            }
            SimError::Model(m) => m.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<siscatter::fitting::FitError> for CliError {
    fn from(e: siscatter::fitting::FitError) -> Self {
        use siscatter::fitting::FitError;
        match e {
            FitError::Data(_) | FitError::Csv(_) | FitError::Io(_) => CliError::Config(e.to_string()),
            FitError::Model(m) => m.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "siscatter",
    version,
    about = "Pair generation and thermal scattering noise in silicon wire waveguides"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration; omitted fields take reference values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// output directory (created if missing)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// overrides simulation.seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// dotted-path override, e.g. `--set pump.power_mw=2.5`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emitted and detector-side spectra per channel
    Spectrum(Common),
    /// Band flux and detection rates versus pump power, with Φ = aP² + bP and κ fits
    PowerSweep(Common),
    /// Band flux versus waveguide temperature, with a linear fit
    TempSweep(Common),
    /// Time-resolved thermal and carrier-channel traces under pulsed pumping
    Timetrace(Common),
    /// Monte Carlo detection events, coincidence histogram and SNR/CAR
    Montecarlo(Common),
    /// Fit one of the analysis models to an `x,y,sigma` CSV
    Fit {
        #[command(flatten)]
        common: Common,
        /// data file; overrides fit.data
        #[arg(long)]
        data: Option<PathBuf>,
        /// overrides fit.model
        #[arg(long, value_enum)]
        model: Option<FitModelName>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::PowerSweep(_) => "power-sweep",
            Command::TempSweep(_) => "temp-sweep",
            Command::Timetrace(_) => "timetrace",
            Command::Montecarlo(_) => "montecarlo",
            Command::Fit { .. } => "fit",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Spectrum(c)
            | Command::PowerSweep(c)
            | Command::TempSweep(c)
            | Command::Timetrace(c)
            | Command::Montecarlo(c) => c,
            Command::Fit { common, .. } => common,
        }
    }
}

fn execute(cli: Cli) -> Result<PathBuf, CliError> {
    let common = cli.command.common().clone();
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("simulation.seed={seed}"));
    }
    if let Command::Fit { data, model, .. } = &cli.command {
        if let Some(d) = data {
            overrides.push(format!("fit.data={}", toml::Value::String(d.display().to_string())));
        }
        if let Some(m) = model {
            let name = serde_json::to_value(m).expect("model name serializes");
            overrides.push(format!("fit.model={}", toml::Value::String(name.as_str().unwrap_or_default().into())));
        }
    }
    let config = RunConfig::load(common.config.as_deref(), &overrides)?;
    let name = cli.command.name();
    let dir = common.out.unwrap_or_else(|| PathBuf::from(format!("siscatter-{name}")));
    let mut out = output::RunOutput::create(&dir, name, &config)?;
    let results = match cli.command {
        Command::Spectrum(_) => commands::spectrum(&config, &mut out)?,
        Command::PowerSweep(_) => commands::power_sweep(&config, &mut out)?,
        Command::TempSweep(_) => commands::temp_sweep(&config, &mut out)?,
        Command::Timetrace(_) => commands::timetrace(&config, &mut out)?,
        Command::Montecarlo(_) => commands::montecarlo(&config, &mut out)?,
        Command::Fit { .. } => commands::fit(&config, &mut out)?,
    };
    out.finish(results)?;
    Ok(dir)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            EXIT_OK
        }
        Err(e) => {
            let kind = match e {
                CliError::Config(_) => "configuration error",
                CliError::Numerical(_) => "numerical failure",
                CliError::Io(_) => "i/o error",
            };
            eprintln!("siscatter: {kind}: {e}");
            e.exit_code()
        }
    }
}
