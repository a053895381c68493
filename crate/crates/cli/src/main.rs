use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = corridor_cli::Cli::parse();
    match corridor_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
