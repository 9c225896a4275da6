use std::process::ExitCode;

use clap::Parser;
use gpcal_cli::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = gpcal_cli::configure_threads() {
        eprintln!("gpcal: {e}");
        return ExitCode::from(exit_code(&e));
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpcal: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
