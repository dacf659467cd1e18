//! Batch CLI for the ou-impact library.
//!
//! JSON config in, JSON report out (plus optional CSVs); reports embed the
//! seed and a canonical config digest and contain no timestamps, so a rerun
//! of the same config is byte-identical. Exit codes: 0 pass, 1 validation
//! failure, 2 numerical-acceptance failure, 3 internal error.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    fn internal(e: ou_impact::Error) -> Self {
        CliError::Internal(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ou-impact",
    about = "Optimal trading under temporary impact on a mean-reverting asset: closed forms, oracles, Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Where to write the JSON report (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form value, certainty equivalent, and the duality gap.
    Value {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Monte Carlo estimate of the expected utility, optional perturbation
    /// study and CSV dumps.
    Montecarlo {
        #[command(flatten)]
        common: CommonArgs,
        /// Single-path trace CSV (t, S, phi, Phi).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Discrete-oracle suites for both variational problems.
    Oracles {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Frictionless-limit and long-horizon asymptotics checks.
    Limits {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides the frictionless seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run() -> Result<bool, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Value { common } => {
            let (doc, digest) = load(&common)?;
            let cfg = config::parse_config(doc)?;
            let report = commands::cmd_value(&cfg, digest)?;
            emit(&common, &report)?;
            Ok(report.pass)
        }
        Command::Montecarlo {
            common,
            trace,
            seed,
        } => {
            let (doc, digest) = load_with_seed(&common, seed)?;
            let cfg = config::parse_config(doc)?;
            let trace = trace.as_ref().map(|p| p.to_string_lossy().into_owned());
            let report = commands::cmd_montecarlo(&cfg, digest, trace.as_deref())?;
            emit(&common, &report)?;
            Ok(report.pass)
        }
        Command::Oracles { common } => {
            let (doc, digest) = load(&common)?;
            let cfg = config::parse_config(doc)?;
            let report = commands::cmd_oracles(&cfg, digest)?;
            emit(&common, &report)?;
            Ok(report.pass)
        }
        Command::Limits { common, seed } => {
            let (doc, digest) = load_with_seed(&common, seed)?;
            let cfg = config::parse_config(doc)?;
            let report = commands::cmd_limits(&cfg, digest)?;
            emit(&common, &report)?;
            Ok(report.pass)
        }
    }
}

fn load(common: &CommonArgs) -> Result<(serde_json::Value, String), CliError> {
    load_with_seed(common, None)
}

fn load_with_seed(
    common: &CommonArgs,
    seed: Option<u64>,
) -> Result<(serde_json::Value, String), CliError> {
    let raw = fs::read_to_string(&common.config).map_err(|e| {
        CliError::Validation(format!("cannot read {}: {e}", common.config.display()))
    })?;
    config::load_document(&raw, seed)
}

fn emit<T: serde::Serialize>(common: &CommonArgs, report: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Internal(format!("serializing report: {e}")))?;
    body.push('\n');
    match &common.out {
        Some(path) => fs::write(path, body)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
