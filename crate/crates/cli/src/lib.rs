//! Library side of the `vbpg` command: configuration, subcommands, output
//! writers and the built-in reproduction checks.

pub mod checks;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};
