use std::process::ExitCode;

use clap::Parser;
use smartlet_cli::{commands, Cli};

fn main() -> ExitCode {
    match commands::dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("smartlet: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
