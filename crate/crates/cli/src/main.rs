use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cvlab_cli::Cli::parse();
    match cvlab_cli::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvlab: error: {e}");
            ExitCode::from(e.code)
        }
    }
}
