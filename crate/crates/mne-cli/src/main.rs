use std::process::ExitCode;

use mne_cli::{args, run};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match args::resolve(&argv) {
        Ok(cli) => cli,
        Err(args::CliError::Usage { message, exit_zero }) => {
            if exit_zero {
                print!("{message}");
                return ExitCode::SUCCESS;
            }
            eprint!("{message}");
            return ExitCode::from(1);
        }
        Err(err @ args::CliError::Config(_)) => {
            eprintln!("{err}");
            return ExitCode::from(1);
        }
    };
    match run::dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
