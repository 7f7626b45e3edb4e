use std::process::ExitCode;

use clap::Parser;
use platoon_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match platoon_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
