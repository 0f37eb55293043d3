mod args;
mod commands;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;

pub enum CliError {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Core(neighvar::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_usage() => 1,
            _ => 2,
        }
    }
}

impl From<neighvar::Error> for CliError {
    fn from(e: neighvar::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::new(cli.config.as_deref(), cli.seed, cli.out)?;
    match &cli.command {
        Command::Generate(a) => commands::generate(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Attack(a) => commands::attack(&ctx, a),
        Command::Detect(a) => commands::detect(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::RunAll => commands::run_all(&ctx),
        Command::Sweep(a) => commands::sweep_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
