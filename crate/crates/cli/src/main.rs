//! `mse-combine`: combine estimates, trace asymptotic risk curves, check
//! minimax verdicts and run finite-sample simulations.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 I/O error,
//! 4 too many failed simulation replications.

mod combine_cmd;
mod config;
mod curve;
mod error;
mod minimax;
mod output;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CombineArgs, CurveArgs, FileConfig, MinimaxArgs, SimulateArgs};
use error::{usage, CliError, ExitCodeExt};

const THREADS_ENV: &str = "MSE_COMBINE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mse-combine", version, about = "Empirical-MSE combination of a consistent and an efficient estimator")]
struct Cli {
    /// TOML file with default values; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Combine two estimates.
    Combine(CombineArgs),
    /// Evaluate a risk functional on a grid.
    RiskCurve(CurveArgs),
    /// Worst-case gain and loss of a risk curve.
    Minimax(MinimaxArgs),
    /// Monte Carlo MSE table for a synthetic design.
    Simulate(SimulateArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .or_usage()
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Combine(args) => combine_cmd::run(args.merged(file.combine)),
        Command::RiskCurve(mut args) => {
            args.engine = args.engine.merged(file.engine);
            args.grid = args.grid.merged(file.grid);
            curve::run(args.merged(file.risk_curve))
        }
        Command::Minimax(mut args) => {
            args.engine = args.engine.merged(file.engine);
            args.grid = args.grid.merged(file.grid);
            minimax::run(args.merged(file.minimax))
        }
        Command::Simulate(mut args) => {
            args.dgp = args.dgp.merged(file.dgp);
            simulate::run(args.merged(file.simulate))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
