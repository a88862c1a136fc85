use std::process::ExitCode;

use clap::Parser;

use cebmdc::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cebmdc: {e}");
            ExitCode::FAILURE
        }
    }
}
