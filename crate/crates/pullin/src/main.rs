use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use pullin::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("pullin {}: check failed: {f}", cli.command.name());
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("pullin {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
