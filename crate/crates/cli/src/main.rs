use std::process::ExitCode;

use clap::Parser;
use fastcp_cli::args::Cli;

fn main() -> ExitCode {
    match fastcp_cli::run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
