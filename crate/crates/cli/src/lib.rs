//! `ktrace` command-line driver: corpus synthesis, preprocessing, model
//! training, evaluation and cross-run report assembly.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataio;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

/// Errors grouped by exit code: config 2, data 3, numeric 4, io 5.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric abort: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl From<kt_core::data::DataError> for CliError {
    fn from(e: kt_core::data::DataError) -> Self {
        match e {
            kt_core::data::DataError::BoundaryOutsideRange { .. } => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<kt_core::synth::SynthError> for CliError {
    fn from(e: kt_core::synth::SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<kt_core::models::ModelError> for CliError {
    fn from(e: kt_core::models::ModelError) -> Self {
        use kt_core::models::ModelError as M;
        match e {
            M::BadConfig(_) | M::UnknownArchitecture(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<kt_core::train::TrainError> for CliError {
    fn from(e: kt_core::train::TrainError) -> Self {
        use kt_core::train::TrainError as T;
        match e {
            T::NonFiniteLoss { .. } | T::NonFiniteGradient(_) => CliError::Numeric(e.to_string()),
            T::Model(m) => CliError::from(m),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<kt_core::metrics::MetricsError> for CliError {
    fn from(e: kt_core::metrics::MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ktrace",
    about = "Knowledge-tracing engine: preprocess records, train five architectures, evaluate and report",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded synthetic corpus (records, metadata, ground truth)
    Synth {
        /// Configuration file with a [synth] section
        #[arg(long)]
        config: Option<PathBuf>,
        /// Corpus preset: default, univ or coe
        #[arg(long)]
        preset: Option<String>,
        /// Override the configured seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean, encode and chronologically split a record CSV
    Preprocess {
        /// Input record CSV
        #[arg(long)]
        input: PathBuf,
        /// Optional student metadata CSV (copied beside the outputs)
        #[arg(long)]
        metadata: Option<PathBuf>,
        /// First test year: earlier years train, this year onward tests
        #[arg(long)]
        boundary_year: i32,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one architecture on a prepared data directory
    Train {
        /// Architecture: dkt, dkt+, dkvmn, sakt or kqn
        #[arg(long)]
        arch: String,
        /// Prepared data directory (from preprocess)
        #[arg(long)]
        data: PathBuf,
        /// Configuration file with [train] / [model] sections
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured epoch count
        #[arg(long)]
        epochs: Option<usize>,
        /// Override the configured batch size
        #[arg(long)]
        batch_size: Option<usize>,
        /// Override the configured learning rate
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a prepared data directory
    Eval {
        /// Checkpoint file written by train
        #[arg(long)]
        checkpoint: PathBuf,
        /// Prepared data directory
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated department codes to report as subsets
        #[arg(long)]
        subsets: Option<String>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge evaluation runs into the paired comparison tables
    Report {
        /// Evaluation run directories
        #[arg(long = "run", required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs one parsed command; the binary maps errors to exit codes.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            config,
            preset,
            seed,
            out,
        } => commands::synth::run(config.as_deref(), preset.as_deref(), seed, &out),
        Command::Preprocess {
            input,
            metadata,
            boundary_year,
            out,
        } => commands::preprocess::run(&input, metadata.as_deref(), boundary_year, &out),
        Command::Train {
            arch,
            data,
            config,
            seed,
            epochs,
            batch_size,
            learning_rate,
            out,
        } => commands::train::run(commands::train::Args {
            arch,
            data,
            config,
            seed,
            epochs,
            batch_size,
            learning_rate,
            out,
        }),
        Command::Eval {
            checkpoint,
            data,
            subsets,
            out,
        } => commands::eval::run(&checkpoint, &data, subsets.as_deref(), &out),
        Command::Report { runs, out } => commands::report_cmd::run(&runs, &out),
    }
}

pub(crate) fn ensure_dir(path: &std::path::Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))
}
