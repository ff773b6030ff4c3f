//! Command-line front end: configuration, orchestration and CSV output.

pub mod commands;
pub mod config;
pub mod output;
mod wavespec;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use relaydiv_core::Error;

use crate::config::{Command, Settings};
use crate::output::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags, config keys or input files.
    Config(String),
    /// The computation itself failed.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::Fit(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "relaydiv",
    version,
    about = "Outage, tradeoff and capacity experiments for asynchronous cooperative relaying"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Diversity-multiplexing tradeoff curves and their crossings.
    Tradeoff(Flags),
    /// Outage probability curves with a log-log slope fit.
    Simulate(Flags),
    /// Positive-definiteness certificate of a waveform.
    Waveform(Flags),
    /// Finite-n block Toeplitz convergence table.
    Toeplitz(Flags),
    /// Asynchronous versus synchronous two-relay capacity.
    CompareCapacity(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Config file or a previously emitted output.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Thread count; never changes results.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long = "snr-db", value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    pub snr_db: Option<String>,
    #[arg(long, value_name = "N")]
    pub trials: Option<u64>,
    #[arg(long, value_name = "FLOAT", allow_hyphen_values = true)]
    pub r: Option<String>,
    #[arg(long, value_name = "NAME")]
    pub scheme: Option<String>,
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::Tradeoff(f) => (Command::Tradeoff, f),
            Sub::Simulate(f) => (Command::Simulate, f),
            Sub::Waveform(f) => (Command::Waveform, f),
            Sub::Toeplitz(f) => (Command::Toeplitz, f),
            Sub::CompareCapacity(f) => (Command::CompareCapacity, f),
        }
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve(command: Command, flags: &Flags) -> Result<Settings, CliError> {
    let mut settings = Settings::defaults(command);
    if let Some(path) = &flags.config {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        for (k, v) in config::parse(&text, command)? {
            settings.set(&k, &v, &path.display().to_string())?;
        }
    }
    let scheme_key = if command == Command::Tradeoff {
        "schemes"
    } else {
        "scheme"
    };
    let overrides = [
        ("seed", "--seed", flags.seed.map(|v| v.to_string())),
        ("snr_db", "--snr-db", flags.snr_db.clone()),
        ("trials", "--trials", flags.trials.map(|v| v.to_string())),
        ("r", "--r", flags.r.clone()),
        (scheme_key, "--scheme", flags.scheme.clone()),
    ];
    for (key, flag, value) in overrides {
        if let Some(v) = value {
            settings.set(key, &v, flag)?;
        }
    }
    Ok(settings)
}

/// Runs one command and returns its report without writing it.
pub fn execute(command: Command, flags: &Flags) -> Result<Report, CliError> {
    let settings = resolve(command, flags)?;
    let workers = match flags.workers {
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    execute_settings(&settings, workers)
}

/// Runs resolved settings on a pool of `workers` threads.
pub fn execute_settings(settings: &Settings, workers: usize) -> Result<Report, CliError> {
    if workers == 0 {
        return Err(CliError::Config("--workers must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| commands::run(settings))
}

fn write_report(report: &Report, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = report.render();
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Config(format!("cannot write stdout: {e}"))),
    }
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, flags) = cli.command.split();
    match execute(command, &flags).and_then(|r| write_report(&r, flags.out.as_ref())) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("relaydiv {command}: {e}");
            e.exit_code()
        }
    }
}
