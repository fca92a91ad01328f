mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Failure with its process exit code: 1 input, 2 segmentation,
/// 3 external service.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(m: impl std::fmt::Display) -> Self {
        Self { code: 1, message: m.to_string() }
    }

    pub fn segment(m: impl std::fmt::Display) -> Self {
        Self { code: 2, message: m.to_string() }
    }

    pub fn service(m: impl std::fmt::Display) -> Self {
        Self { code: 3, message: m.to_string() }
    }
}

impl From<chartlens::Error> for CliError {
    fn from(e: chartlens::Error) -> Self {
        use chartlens::Error as E;
        match &e {
            E::Geometry(_) => Self::input(e),
            E::Pie(_) | E::NoMarks(_) => Self::segment(e),
            E::Lines(_) | E::Mllm(_) => Self::service(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; help and version are not errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
