use std::process::ExitCode;

use clap::Parser;
use swarmforge_cli::Cli;

fn main() -> ExitCode {
    match swarmforge_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
