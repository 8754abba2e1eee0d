//! `wvsim` command-line front end.
//!
//! Every failure prints one line `ERR:<code>:<field> <message>` on stderr
//! and exits with `<code>`: 2 for configuration problems, 3 for physicality
//! violations, 4 for degenerate estimators, 1 for I/O trouble.

mod commands;
pub mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, ErrorClass};
use config::ConfigError;

#[derive(Debug, Parser)]
#[command(name = "wvsim", version, about = "Weak-value measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a weak (or modular) value with one protocol.
    WeakValue(Common),
    /// Bias/variance table over a grid of coupling strengths.
    SweepXi(Common),
    /// Direct wavefunction measurement: scanning, scan_free or compare.
    Wavefunction(Common),
    /// Evaluate, rotate, split or compile a four-node diagram.
    Diagram(Common),
    /// Kirkwood–Dirac grid, directly and through the probe.
    Kd(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration instead of --config.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "wvsim-out")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Use exact probabilities instead of sampling.
    #[arg(long)]
    exact: bool,
}

/// Anything that ends a run early.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Lib(Error),
    Io { path: String, message: String },
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn lib_field(e: &Error) -> String {
    match e {
        Error::DimensionMismatch { .. } => "dim".into(),
        Error::NonFinite(what) => (*what).into(),
        Error::NotHermitian { .. } => "observable".into(),
        Error::NoConvergence { .. } => "eigensolver".into(),
        Error::Invalid { what, .. } => (*what).into(),
        Error::Unrealizable(_) => "protocol.xi".into(),
        Error::UndefinedWeakValue { .. } => "boundary".into(),
        Error::DegenerateEstimator(_) => "estimator".into(),
        Error::UndefinedEstimate { .. } => "counts".into(),
        Error::MissingSetting(_) => "shots".into(),
        Error::InvalidDistribution(_) => "distribution".into(),
        Error::NotCompilable { slot, .. } => format!("slot{slot}"),
        Error::DcNull { .. } => "state".into(),
    }
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Lib(e) => match e.class() {
                ErrorClass::Input => 2,
                ErrorClass::Physicality => 3,
                ErrorClass::Degenerate => 4,
            },
            Failure::Io { .. } => 1,
        }
    }

    pub fn line(&self) -> String {
        let (field, msg) = match self {
            Failure::Config(c) => (c.field.clone(), c.message.clone()),
            Failure::Lib(e) => (lib_field(e), e.to_string()),
            Failure::Io { path, message } => (path.clone(), message.clone()),
        };
        let msg = msg.replace('\n', " ");
        format!("ERR:{}:{} {}", self.code(), field, msg)
    }
}

/// Sizes the global worker pool from `WVSIM_THREADS` (unset or 0 = automatic).
fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("WVSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        Failure::Config(ConfigError::new(
            "WVSIM_THREADS",
            format!("expected a non-negative integer, got {raw:?}"),
        ))
    })?;
    if n > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            eprintln!("ERR:2:args {first}");
            return 2;
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::WeakValue(c) => commands::weak_value(c),
        Command::SweepXi(c) => commands::sweep_xi(c),
        Command::Wavefunction(c) => commands::wavefunction(c),
        Command::Diagram(c) => commands::diagram(c),
        Command::Kd(c) => commands::kd(c),
    });
    match result {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            0
        }
        Err(f) => {
            eprintln!("{}", f.line());
            f.code()
        }
    }
}

#[cfg(test)]
mod tests;
