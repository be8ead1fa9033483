use std::process::ExitCode;

use clap::Parser;
use clonedetect_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clonedetect: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
