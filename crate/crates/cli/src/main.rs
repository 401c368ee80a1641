//! Command-line front end for the pulse-synthesis library: solve for
//! energy-optimal envelopes, sweep error models, compare against the
//! square-pulse reference, and export trajectories — all as pulse files
//! and plot-ready CSV tables.
//!
//! Exit codes: 0 success, 2 usage error, 3 solver failure, 4 I/O failure.

mod commands;
mod output;
mod pulse_file;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CompareArgs, OptimizeArgs, SweepArgs, TrajectoryArgs};

#[derive(Parser)]
#[command(
    name = "mspulse",
    version,
    about = "Energy-optimal amplitude-modulated pulses for Molmer-Sorensen gates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize an energy-optimal pulse for a given loop count and
    /// peak Rabi rate
    Optimize(OptimizeArgs),
    /// Sweep detuning offsets over a pulse and tabulate loop closure,
    /// enclosed area, and fidelity
    Sweep(SweepArgs),
    /// Tabulate optimized vs square-pulse energies across loop counts
    Compare(CompareArgs),
    /// Export the envelope and phase-space path of a pulse as CSV
    Trajectory(TrajectoryArgs),
}

/// Warn-level logger printing to stderr, so library diagnostics reach the
/// terminal without polluting CSV/stdout output.
struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().to_string().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn main() -> ExitCode {
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(log::LevelFilter::Warn);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Optimize(args) => commands::optimize(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Compare(args) => commands::compare(&args),
        Command::Trajectory(args) => commands::trajectory(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
