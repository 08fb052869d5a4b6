mod args;
mod commands;
mod config;
mod error;
mod grid;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::sequential;

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors and 0 on --help
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => sequential(|| commands::simulate(a)),
        Command::Equilibrium(a) => sequential(|| commands::equilibrium(a)),
        Command::Eigen(a) => sequential(|| commands::eigen(a)),
        Command::Boundary(a) => commands::boundary(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Poincare(a) => sequential(|| commands::poincare(a)),
        Command::Recurrence(a) => sequential(|| commands::recurrence(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rendezvous: error: {}", e.message().replace('\n', " "));
            e.exit_code()
        }
    }
}
