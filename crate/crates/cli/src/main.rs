//! `vst` command-line entry point.
//!
//! Exit codes: 0 success, 1 validation error (bad arguments, config, or input
//! files), 2 runtime or backend error. Diagnostics go to stderr; stdout
//! carries machine-parseable data only.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(message) => write!(f, "{message}"),
            CliError::Runtime(message) => write!(f, "{message}"),
        }
    }
}

impl From<vst_core::trace::TraceError> for CliError {
    fn from(error: vst_core::trace::TraceError) -> Self {
        CliError::Validation(error.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "vst",
    version,
    about = "Streaming-thought runtime, simulator, and data-synthesis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full session over a frame trace and query trace
    Run(commands::run::RunArgs),
    /// Interactive questions over a playing frame trace
    Chat(commands::chat::ChatArgs),
    /// Compare streaming-thought latency against post-query chain-of-thought
    SimulateLatency(commands::simulate::SimulateArgs),
    /// Print the streaming attention mask for a token-type string
    Mask(commands::mask::MaskArgs),
    /// Pack clips and thoughts into capped training segments with loss spans
    Pack(commands::pack::PackArgs),
    /// Build a knowledge graph from scene clips and synthesize QA data
    Synthesize(commands::synthesize::SynthesizeArgs),
    /// Compute group advantages and the clipped objective from a rollout file
    RlCheck(commands::rl_check::RlCheckArgs),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => commands::run::run(args),
        Command::Chat(args) => commands::chat::run(args),
        Command::SimulateLatency(args) => commands::simulate::run(args),
        Command::Mask(args) => commands::mask::run(args),
        Command::Pack(args) => commands::pack::run(args),
        Command::Synthesize(args) => commands::synthesize::run(args),
        Command::RlCheck(args) => commands::rl_check::run(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(error) => {
            // Help and version requests are success; everything else is a
            // usage problem.
            let code = if error.use_stderr() { 1 } else { 0 };
            let _ = error.print();
            std::process::exit(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => {}
        Err(error) => {
            eprintln!("error: {error}");
            std::process::exit(error.exit_code());
        }
    }
}
