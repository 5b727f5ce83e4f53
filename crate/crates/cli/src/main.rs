//! `mixgraph` command-line tool.

// `!(a < b)` is used on purpose so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// Bad flags, missing inputs or an unusable config file (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

/// Either kind of failure a run can end with.
#[derive(Debug)]
pub enum Failure {
    Usage(UsageError),
    Compute(mixgraph::Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e)
    }
}

impl From<mixgraph::Error> for Failure {
    fn from(e: mixgraph::Error) -> Self {
        Failure::Compute(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Compute(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();
    let level = if common.verbose { "info,mixgraph=debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(threads) = common.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot set up {threads} worker threads: {e}");
            return ExitCode::from(1);
        }
    }

    let outcome = config::resolve(&cli)
        .map_err(Failure::from)
        .and_then(|cfg| commands::run(&cfg, common.verbose));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(UsageError(msg))) => {
            eprintln!("error: {msg}");
            eprintln!("run `mixgraph --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
