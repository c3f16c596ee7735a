use std::process::ExitCode;

use clap::Parser;
use coverest_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COVEREST_LOG", "info"))
        .format_timestamp(None)
        .init();
    // clap exits with 2 on usage errors, matching the config-error code
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coverest: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
