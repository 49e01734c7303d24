//! Command-line front end for `clids-core`: CSV ingestion, run-directory
//! artifacts and the `clids` binary's subcommands.

pub mod artifacts;
pub mod cli;
pub mod commands;
pub mod error;
pub mod ingest;

pub use error::CliError;
