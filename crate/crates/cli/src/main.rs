mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::FromArgMatches;

use args::Cli;
use commands::VerifyFailed;
use output::{Meta, Output};

const USAGE: u8 = 1;
const NUMERICAL: u8 = 2;
const VERIFY: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerifyFailed>().is_some() {
        return VERIFY;
    }
    match err.downcast_ref::<oksphere::Error>() {
        Some(e) if e.is_numerical() => NUMERICAL,
        _ => USAGE,
    }
}

fn main() -> ExitCode {
    let matches = match config::resolve(std::env::args_os().collect()) {
        Ok(Ok(m)) => m,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(USAGE);
        }
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(USAGE);
        }
    };
    let effective = config::effective(&matches);
    let meta = Meta {
        tool: "oksphere",
        version: env!("CARGO_PKG_VERSION"),
        command: effective["command"].as_str().unwrap_or_default().to_string(),
        config_hash: config::hash(&effective),
        seed: cli.seed,
    };
    let out = Output {
        meta,
        out: cli.out.clone(),
        out_dir: cli.out_dir.clone(),
    };
    match commands::run(&cli.command, &out, cli.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// A closed downstream pipe (as with `| head`) is not an error.
fn broken_pipe(err: &anyhow::Error) -> bool {
    use std::io::ErrorKind::BrokenPipe;
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == BrokenPipe)
            || c.downcast_ref::<serde_json::Error>().is_some_and(|e| e.io_error_kind() == Some(BrokenPipe))
            || c.downcast_ref::<csv::Error>()
                .is_some_and(|e| matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == BrokenPipe))
    })
}
