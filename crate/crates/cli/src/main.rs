mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Usage(first_line(&e.to_string()))),
    };
    let mut logger = env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if cli.verbose { "info" } else { "warn" }),
    );
    if !cli.verbose {
        logger.format_timestamp(None);
    }
    logger.init();

    let outcome = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Risk(a) => commands::risk(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Serve(a) => commands::serve(a),
        Command::Fixture(a) => commands::fixture(a),
        Command::Generate(a) => commands::generate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn first_line(text: &str) -> String {
    let line = text.lines().next().unwrap_or_default();
    line.strip_prefix("error: ").unwrap_or(line).to_owned()
}
