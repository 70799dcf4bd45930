//! `rog`: synthesize, corrupt, fit, predict, evaluate and check robust
//! generative classifiers on feature files.

mod cmd;
mod model;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rog_core::RogError;

#[derive(Debug, Parser)]
#[command(name = "rog", version, about = "Robust generative classifiers on pre-computed features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// JSON file with default values; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw contaminated Gaussian train/val/test sets.
    Synth(cmd::synth::Args),
    /// Inject label noise into a feature file.
    Corrupt(cmd::corrupt::Args),
    /// Fit a classifier on one or more feature layers.
    Fit(cmd::fit::Args),
    /// Write posteriors and labels for feature files.
    Predict(cmd::predict::Args),
    /// Accuracy and NLL of a fitted model.
    Eval(cmd::eval::Args),
    /// Large-sample, closed-form and breakdown checks.
    Theory(cmd::theory::Args),
    /// Synthetic benchmark across outlier fractions.
    Bench(cmd::bench::Args),
}

fn configure_threads() -> Result<(), RogError> {
    let Ok(raw) = std::env::var("ROG_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| RogError::Config(format!("ROG_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| RogError::Config(format!("thread pool: {e}")))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|c| c.downcast_ref::<RogError>())
        .map(|e| e.exit_code() as u8)
        .unwrap_or(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().map_err(anyhow::Error::from).and_then(|()| match cli.command {
        Command::Synth(a) => cmd::synth::run(a),
        Command::Corrupt(a) => cmd::corrupt::run(a),
        Command::Fit(a) => cmd::fit::run(a),
        Command::Predict(a) => cmd::predict::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::Theory(a) => cmd::theory::run(a),
        Command::Bench(a) => cmd::bench::run(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
