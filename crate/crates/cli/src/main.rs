use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod config;

/// Online meta-learning for probabilistic spiking networks.
#[derive(Debug, Parser)]
#[command(name = "owoml", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run(cmd::run::RunArgs),
    /// Rate-encode a pattern file into a binary spike dataset.
    Encode(cmd::encode::EncodeArgs),
    /// Compare analytic gradients against finite differences on tiny networks.
    Gradcheck(cmd::gradcheck::GradcheckArgs),
    /// Summarize a parameter checkpoint.
    InspectCheckpoint {
        path: PathBuf,
        /// Also print every parameter value.
        #[arg(long)]
        values: bool,
    },
}

/// Failure classes mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Exit code 1.
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
    /// Exit code 1 without a message; the command already reported.
    #[error("check failed")]
    CheckFailed,
}

impl CliError {
    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::CheckFailed => 1,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd::run::run(args),
        Command::Encode(args) => cmd::encode::run(args),
        Command::Gradcheck(args) => cmd::gradcheck::run(args),
        Command::InspectCheckpoint { path, values } => cmd::inspect::run(&path, values),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::CheckFailed) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
