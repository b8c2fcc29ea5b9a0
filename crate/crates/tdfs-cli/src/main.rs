//! Command-line front end: run experiments from JSON configs, verify the
//! subspace conditions, and reproduce the reference figures.
//!
//! Exit codes: 0 success (or verdict true), 1 verdict false, 2 usage or
//! configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "tdfs",
    about = "Simulate Lindblad dynamics with moving jump operators, verify \
             decoherence-free subspace conditions, and synthesize the control \
             fields that keep a state inside the moving subspace"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the master equation for a JSON experiment config; writes a
    /// CSV trajectory and prints a JSON run report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check both subspace conditions on a verification grid; writes a JSON
    /// report. Exits 0 when the verdict is true, 1 when it is false.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's verification tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Re-run one of the reference figures (fig2a, fig2b, fig4a, fig4b),
    /// writing CSV data and a gnuplot script into the output directory.
    Reproduce {
        #[arg(long)]
        figure: String,
        #[arg(long)]
        outdir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate { config } => commands::cmd_simulate(config).map(|()| ExitCode::SUCCESS),
        Command::Verify { config, tol } => commands::cmd_verify(config, *tol).map(|verdict| {
            if verdict {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }),
        Command::Reproduce { figure, outdir } => {
            commands::cmd_reproduce(figure, outdir).map(|()| ExitCode::SUCCESS)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(message)) => {
            eprintln!("numerical failure: {message}");
            ExitCode::from(3)
        }
    }
}
