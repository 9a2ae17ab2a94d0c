use std::process::ExitCode;

use clap::Parser;
use shred::cli::{exit_code, run, Cli, Outcome, EXIT_THRESHOLD};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ThresholdExceeded) => ExitCode::from(EXIT_THRESHOLD as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
