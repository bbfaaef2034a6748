//! Command-line front end: benchmark generation, fitting, Monte-Carlo sweeps,
//! oracle verification and spectral feasibility reports.

pub mod args;
pub mod bench;
pub mod files;
pub mod fit_cmd;
pub mod gen;
pub mod record;
pub mod spectrum_cmd;
pub mod verify_cmd;

use std::process::ExitCode;

use args::{Cli, Command};

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Gen(a) => gen::run(&a).map(|_| ExitCode::SUCCESS),
        Command::Fit(a) => fit_cmd::run(&a).map(|_| ExitCode::SUCCESS),
        Command::Bench(a) => bench::run(&a).map(|_| ExitCode::SUCCESS),
        Command::Verify(a) => verify_cmd::run(&a),
        Command::Spectrum(a) => spectrum_cmd::run(&a).map(|_| ExitCode::SUCCESS),
    }
}
