//! Library half of the `renewal` command-line tool: configuration files,
//! transaction CSV ingestion, checkpoint packing, and the four
//! subcommands (train, predict, evaluate, generate).

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use error::CliError;
