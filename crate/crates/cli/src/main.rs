use std::process::ExitCode;

use clap::Parser;
use dataspace_cli::commands::check_paths;
use dataspace_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match check_paths(&cli).and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
