//! `prerand`: command-line front end for the pre-Randers engine.

mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("PRERAND_THREADS").ok().and_then(|s| s.trim().parse().ok());
    prerand_core::exec::configure_threads(threads);
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("prerand: {e}");
            ExitCode::from(e.code())
        }
    }
}
