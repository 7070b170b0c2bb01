//! `qio`: orbital optimization from the command line.
//!
//! Exit status is 0 on success, 1 on error and 2 when a run finished with an
//! oscillation or non-convergence warning.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, LogLevel};
use commands::Outcome;

fn init_logging(level: LogLevel) {
    let filter = match level {
        LogLevel::Quiet => log::LevelFilter::Error,
        LogLevel::Info => log::LevelFilter::Info,
        LogLevel::Debug => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn execute(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Run(a) => commands::cmd_run(a),
        Command::Report(a) => commands::cmd_report(a),
        Command::Oracle(a) => commands::cmd_oracle(a),
        Command::Compare(a) => commands::cmd_compare(a),
    }
}

/// One line per error: `qio: error[kind]: message: cause: ...`.
fn diagnostic(err: &anyhow::Error) -> String {
    let kind = err
        .chain()
        .find_map(|e| e.downcast_ref::<qio_core::Error>())
        .map_or("io", |e| e.kind());
    let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
    format!("qio: error[{kind}]: {}", chain.join(": "))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version go to stdout and are not failures
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.log_level);
    match execute(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Warning) => ExitCode::from(2),
        Err(e) => {
            eprintln!("{}", diagnostic(&e));
            ExitCode::from(1)
        }
    }
}
