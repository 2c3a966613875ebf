use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{Command, Resolved, Settings};

/// Solvers for the 2D attractive fractional Gross-Pitaevskii equation.
///
/// Exit status: 0 success, 1 failed checks (verify), 2 configuration
/// error, 3 non-convergence, 4 escape from the kinetic ball, 5 resolution
/// guard tripped.
#[derive(Parser)]
#[command(name = "fracgp", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON file with any of the flag values; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ground state Q_s and N_s*, or an N_s* curve with --s-list.
    Groundstate(Common),
    /// Local minimizer on the mass sphere.
    Minimize(Common),
    /// Mountain-pass solution.
    Saddle(Common),
    /// Sweep of both branches towards s = 1.
    Sweep(Common),
    /// Invariant suite.
    Verify(Common),
}

fn main() -> ExitCode {
    let (command, common) = match Cli::parse().command {
        Cmd::Groundstate(c) => (Command::Groundstate, c),
        Cmd::Minimize(c) => (Command::Minimize, c),
        Cmd::Saddle(c) => (Command::Saddle, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let resolved = match common.config.as_deref().map(Settings::from_file).transpose() {
        Ok(file) => Resolved::new(command, common.settings.over(file.unwrap_or_default())),
        Err(e) => Err(e),
    };
    let code = resolved.and_then(|cfg| commands::run(&cfg)).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        commands::exit_code(&e)
    });
    ExitCode::from(code)
}
