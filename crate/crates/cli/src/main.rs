//! Command-line front end for the restart-scheme solvers: run single solves,
//! batch benchmarks, invariant verification, plot exports and bound reports.

use std::process::ExitCode;

use afom_restart_cli::commands::{self, bench, bounds, plot, solve, verify};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "afom-restart",
    version,
    about = "Restart schemes for accelerated first-order methods: solve, bench, verify, plot, bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance with one scheme and export trace files.
    Solve(solve::SolveArgs),
    /// Run a scheme list over a generated batch and summarize iterations.
    Bench(bench::BenchArgs),
    /// Check engine, trace and bound inequalities on one instance.
    Verify(verify::VerifyArgs),
    /// Merge solve series into plot data (CSV, optional SVG).
    Plot(plot::PlotArgs),
    /// Print the closed-form bound report for given constants.
    Bounds(bounds::BoundsArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not input errors.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(commands::EXIT_INPUT),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(args) => solve::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Verify(args) => verify::run(args),
        Command::Plot(args) => plot::run(args),
        Command::Bounds(args) => bounds::run(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::EXIT_INPUT)
        }
    }
}
