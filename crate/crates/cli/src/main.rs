//! `epiwave` — change-point segmentation, count time-series modelling,
//! compartmental simulation/fitting and reproduction-number estimation over
//! daily incidence files.
//!
//! Every command writes a report bundle (JSON summary, plot-ready CSVs and a
//! hashed manifest) into the output directory; re-running with the same
//! configuration and seed reproduces the bundle byte for byte.

mod bundle;
mod commands;
mod config;
mod error;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{AppError, ExitCode};

#[derive(Debug, Parser)]
#[command(name = "epiwave", version, about = "Epidemic incidence analysis toolkit")]
struct Cli {
    /// Optional TOML configuration; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Output directory (defaults to $EPIWAVE_OUT or ./epiwave-out).
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,

    /// Master seed; all randomness derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect change-points and forecast from the final segment.
    Changepoint(commands::changepoint::Args),
    /// Fit the log-linear count model, detect interventions, forecast.
    Countts(commands::countts::Args),
    /// Simulate a compartmental model forward.
    Simulate(commands::simulate::Args),
    /// Fit the seven-state protection/quarantine model to observed data.
    FitSeirqpd(commands::fit_seirqpd::Args),
    /// Estimate the effective reproduction number.
    Rt(commands::rt::Args),
    /// Run the whole pipeline over one dataset.
    ReportAll(commands::report_all::Args),
}

fn main() {
    let cli = Cli::parse();
    let outcome = run(cli);
    match outcome {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(match err.exit_code() {
                ExitCode::Validation => 2,
                ExitCode::Estimation => 3,
            });
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let config = RunConfig::load(cli.config.as_deref(), cli.out, cli.seed)?;
    match cli.command {
        Command::Changepoint(args) => commands::changepoint::run(&config, &args),
        Command::Countts(args) => commands::countts::run(&config, &args),
        Command::Simulate(args) => commands::simulate::run(&config, &args),
        Command::FitSeirqpd(args) => commands::fit_seirqpd::run(&config, &args),
        Command::Rt(args) => commands::rt::run(&config, &args),
        Command::ReportAll(args) => commands::report_all::run(&config, &args),
    }
}
