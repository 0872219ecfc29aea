//! Batch front-end for the duct acoustics solver: configuration documents,
//! subcommands and their CSV/JSON outputs.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{config_hash, execute, exit_code, prepare, Command, Overrides, SweepKind, VERSION};
pub use config::RunConfig;
