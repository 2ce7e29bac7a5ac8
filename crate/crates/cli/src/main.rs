use std::process::ExitCode;

use clap::Parser;
use mpsplit_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpsplit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
