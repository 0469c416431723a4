use std::process::ExitCode;

use clap::Parser;
use pap_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match pap_cli::run(&cli, std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
