use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = swmparc_cli::Cli::parse();
    match swmparc_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(swmparc_cli::exit_code(&e))
        }
    }
}
