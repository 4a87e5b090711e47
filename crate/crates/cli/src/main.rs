mod args;
mod commands;
mod manifest;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Validation(String),
    NotConverged(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Validation(_) => 3,
            CliError::NotConverged(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Validation(m) | CliError::NotConverged(m) => m,
        }
    }
}

impl From<momentforge::Error> for CliError {
    fn from(e: momentforge::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Recover(a) => commands::recover(a),
        Command::DpSynth(a) => commands::dp_synth(a),
        Command::Sde(a) => commands::sde(a),
        Command::Popmle(a) => commands::popmle(a),
        Command::ExperimentDp(a) => commands::experiment_dp(a),
        Command::Verify(a) => {
            if verify::run(a.suite) {
                Ok(())
            } else {
                Err(CliError::Validation("verification failed".into()))
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
