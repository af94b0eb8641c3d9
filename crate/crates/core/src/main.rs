use std::io;
use std::process::ExitCode;

use clap::Parser;
use provseg::cli::{execute, Cli, SEED_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var(SEED_ENV).ok();
    let stdout = io::stdout();
    match execute(cli, env_seed.as_deref(), &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
