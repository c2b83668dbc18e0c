//! `tbr`: build a baseline grid, estimate park and defense effects, and
//! report diagnostics.

mod args;
mod cmd;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmd::baseline::BuildBaselineArgs;
use cmd::diagnose::DiagnoseArgs;
use cmd::estimate::EstimateArgs;
use cmd::simulate::SimulateArgs;
use error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "tbr", version, about = "Park and team-defense effects from total-bases residuals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pool batted balls into the EV x LA expected-total-bases grid
    BuildBaseline(BuildBaselineArgs),
    /// Fit per-season park and defense effects against a baseline
    Estimate(EstimateArgs),
    /// Home/away splits, stability and intercept series from estimates
    Diagnose(DiagnoseArgs),
    /// Generate synthetic data with known effects
    Simulate(SimulateArgs),
}

fn run(cli: &Cli) -> Result<output::Outputs, CliError> {
    match &cli.command {
        Command::BuildBaseline(a) => cmd::baseline::run(a),
        Command::Estimate(a) => cmd::estimate::run(a),
        Command::Diagnose(a) => cmd::diagnose::run(a),
        Command::Simulate(a) => cmd::simulate::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage("usage", e.render().to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(&cli) {
        Ok(out) => {
            for p in out.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.code as u8)
        }
    }
}
