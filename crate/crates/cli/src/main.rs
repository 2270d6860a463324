//! `meinardus` command-line tool.
//!
//! Data goes to stdout (or `--out`), diagnostics to stderr. Exit codes:
//! 1 usage, 2 bad input, 3 model outside a method's preconditions,
//! 4 numerical failure.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use meinardus::Error;

use args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownModel(_)
        | Error::Parse(_)
        | Error::Validation(_)
        | Error::Io(_)
        | Error::InvalidArgument(_)
        | Error::NonUnitConstantTerm(_) => 2,
        Error::MissingProfile(_)
        | Error::NoPositiveMass
        | Error::NotConvergent { .. }
        | Error::MissingDeltaCoeffs { .. }
        | Error::UnsupportedForm(_)
        | Error::Unstabilized(_)
        | Error::PoleAtOne => 3,
        Error::PrecisionExhausted { .. }
        | Error::TruncationTooShallow { .. }
        | Error::QuadratureNotConverged { .. }
        | Error::SeriesDivergence(_)
        | Error::OutOfRange(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Enumerate(a) => commands::enumerate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Saddle(a) => commands::saddle(a),
        Command::Nllt(a) => commands::nllt(a),
        Command::Charfn(a) => commands::charfn(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
