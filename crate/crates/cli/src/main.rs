mod cli;
mod commands;
mod config;
mod error;
mod manifest;
mod tables;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use cli::{Cli, Command};
use error::{CliError, CliResult, EXIT_USAGE};

const THREADS_ENV: &str = "DERMA_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {n} worker threads: {e}")))
}

fn parse() -> CliResult<Cli> {
    let argv = config::expand(std::env::args_os().collect())?;
    // Config values come first, so a repeated flag from the command line wins.
    let matches = Cli::command()
        .mut_subcommands(|s| s.args_override_self(true))
        .get_matches_from(argv);
    Cli::from_arg_matches(&matches).map_err(|e| e.exit())
}

fn run() -> CliResult<()> {
    let cli = parse()?;
    init_threads()?;
    match &cli.command {
        Command::Generate(a) => commands::generate::run(a),
        Command::Label(a) => commands::label::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
        Command::Calibrate(a) => commands::calibrate::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
    }
    .map_err(|e| match e {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", cli.command.name())),
        CliError::Io(m) => CliError::Io(format!("{}: {m}", cli.command.name())),
        CliError::Numeric(m) => CliError::Numeric(format!("{}: {m}", cli.command.name())),
    })
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(EXIT_USAGE as u8))
        }
    }
}
