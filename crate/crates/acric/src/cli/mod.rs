//! The `acric` command line.
//!
//! Subcommands: `keygen` (provision a master key), `init` (run the key
//! exchange over TCP in any role), `bus` (simulate a scenario file),
//! `attack` (brute-force forgery experiments), `storage` (chain storage
//! accounting), `bench` (frame and initialization timings).
//!
//! Conventions: results go to stdout as JSON, the fully resolved
//! configuration of every run is echoed to stderr as JSON, and failures
//! print a machine-readable error object to stderr. Exit codes: 0 success,
//! 2 configuration error, 3 protocol or authentication failure, 4 I/O
//! error.

mod bench;
mod commands;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::init::{ChannelError, InitError};
use crate::transport::ScenarioError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PROTOCOL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Protocol(String),
    Io(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Protocol(_) => "protocol",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Protocol(m) | CliError::Io(m) => m,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Protocol(_) => EXIT_PROTOCOL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<InitError> for CliError {
    fn from(e: InitError) -> Self {
        match e {
            InitError::Channel(ChannelError::Io(io)) => CliError::Io(io.to_string()),
            other => CliError::Protocol(other.to_string()),
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        CliError::from(InitError::Channel(e))
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::InitFailed { .. } => CliError::Protocol(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "acric",
    version,
    about = "Authenticated CRC toolkit: key provisioning, session setup, bus simulation, attack experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a master key file (64 hex characters).
    Keygen(commands::KeygenArgs),
    /// Run the session initialization over TCP.
    Init(commands::InitArgs),
    /// Simulate a bus scenario and write a JSON-lines trace.
    Bus(commands::BusArgs),
    /// Run a brute-force forgery experiment and export its CDF.
    Attack(commands::AttackArgs),
    /// Print per-device chain storage overhead for every strategy.
    Storage(commands::StorageArgs),
    /// Measure frame-level and initialization overhead.
    Bench(bench::BenchArgs),
}

/// Echo the resolved configuration of a run for reproducibility.
fn echo_config<T: Serialize>(config: &T) {
    #[derive(Serialize)]
    struct Echo<'a, T: Serialize> {
        resolved_config: &'a T,
    }
    eprintln!("{}", serde_json::to_string(&Echo { resolved_config: config }).expect("serializable"));
}

fn emit_error(err: &CliError) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": { "kind": err.kind(), "message": err.message() } })
    );
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = err.print();
            return code;
        }
    };

    let result = match cli.command {
        Command::Keygen(args) => commands::keygen(args),
        Command::Init(args) => commands::init(args),
        Command::Bus(args) => commands::bus(args),
        Command::Attack(args) => commands::attack(args),
        Command::Storage(args) => commands::storage(args),
        Command::Bench(args) => bench::bench(args),
    };

    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            emit_error(&err);
            err.exit_code()
        }
    }
}
