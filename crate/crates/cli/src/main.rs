//! `strokesense` command-line driver.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 training failure.
//! Logs go to standard error; results go to files or standard output.

mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use strokesense::config::RunConfig;
use strokesense::Error;

pub const DATA_DIR_ENV: &str = "STROKESENSE_DATA_DIR";

#[derive(Parser)]
#[command(name = "strokesense", version, about = "Pen-IMU handwriting recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed; overrides `seed` in the config file (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print a machine-readable JSON summary on standard output.
    #[arg(long)]
    pub json: bool,
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth(commands::SynthArgs),
    /// Turn a framed sensor byte stream into a labeled dataset.
    Ingest(commands::IngestArgs),
    /// Write an augmented copy of a dataset.
    Augment(commands::AugmentArgs),
    /// Train a model on a whole dataset.
    Train(commands::TrainArgs),
    /// Evaluate a trained model on a dataset.
    Eval(commands::EvalArgs),
    /// Run one of the split protocols end to end.
    Protocol(commands::ProtocolArgs),
    /// Accuracy against number of classes.
    SweepClasses(commands::SweepClassesArgs),
    /// Accuracy against per-class training-set size.
    SweepSize(commands::SweepSizeArgs),
    /// Dictionary correction of recognized words.
    Decode(commands::DecodeArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(commands::GradcheckArgs),
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Training(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Training(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TrainingFailed(_) | Error::Diverged { .. } => Failure::Training(e.into()),
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(inner) => inner.into(),
            Err(e) => Failure::Data(e),
        }
    }
}

pub type CmdResult = std::result::Result<(), Failure>;

/// Resolves a relative path against `STROKESENSE_DATA_DIR` when it is set.
pub fn data_path(p: &Path) -> PathBuf {
    match std::env::var_os(DATA_DIR_ENV) {
        Some(base) if p.is_relative() && !p.as_os_str().is_empty() && p != Path::new("-") => Path::new(&base).join(p),
        _ => p.to_path_buf(),
    }
}

/// Loads the config file (if any) and settles the seed.
pub fn load_config(common: &Common) -> Result<(RunConfig, u64), Failure> {
    let cfg = match &common.config {
        Some(p) => RunConfig::load(&data_path(p)).map_err(|e| match e {
            Error::Io { .. } => Failure::Data(e.into()),
            other => Failure::Usage(other.to_string()),
        })?,
        None => RunConfig::default(),
    };
    let seed = common.seed.or(cfg.seed).unwrap_or(0);
    Ok((cfg, seed))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Ingest(a) => commands::ingest(a),
        Command::Augment(a) => commands::augment(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Protocol(a) => commands::protocol(a),
        Command::SweepClasses(a) => commands::sweep_classes(a),
        Command::SweepSize(a) => commands::sweep_size(a),
        Command::Decode(a) => commands::decode(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}\n\nRun with --help for usage."),
                Failure::Data(e) | Failure::Training(e) => eprintln!("error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}
