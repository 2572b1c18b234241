//! `dr-ate`: estimate demand-response treatment effects from CSV data and
//! run the synthetic variance experiments.
//!
//! Exit status: 0 on success, 2 for invalid arguments or configurations,
//! 3 for unreadable or invalid input data.

mod args;
mod commands;
mod render;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
