//! `semrank` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (missing or malformed
//! input, failed computation).

mod cli;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use cli::Cli;

/// Marks an error as a usage problem (exit code 1) rather than a data problem.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn report(err: &anyhow::Error) -> u8 {
    eprintln!("error: {err:#}");
    if err.downcast_ref::<UsageError>().is_some() {
        1
    } else {
        2
    }
}

fn run(argv: Vec<OsString>) -> u8 {
    let argv = match config::apply(argv) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os().collect()))
}
