//! `qcantor`: command-line access to the 1/4-Cantor spectral computations.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 argument error,
//! 3 truncation refused (leakage budget over the limit), 4 invariant
//! violation.

mod commands;
mod output;

use clap::Parser;
use std::process::ExitCode;

use commands::Cli;

fn exit_code(err: &anyhow::Error) -> u8 {
    use quarter_cantor::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidArgument(_)) | Some(Error::Range(_)) => 2,
        Some(Error::TruncationRefused { .. }) => 3,
        Some(Error::InvariantViolation(_)) => 4,
        None if err.downcast_ref::<commands::UsageError>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| commands::run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
