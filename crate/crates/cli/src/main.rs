//! `rsplab` — seeded experiment harness for the RSP toolkit.
//!
//! Exit codes: 0 success, 1 property failure, 2 configuration error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::Cli;

/// Why a run stopped early.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed input; exit 2.
    Config(String),
    /// The run completed but a checked property did not hold; exit 1.
    Property(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Property(_) => 1,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(msg) => eprintln!("error: {msg}"),
                Failure::Property(msg) => eprintln!("FAILED: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
