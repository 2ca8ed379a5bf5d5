//! Config-driven runner behind the `tdi` binary.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use commands::{run, Command, Outputs};
pub use config::RunConfig;
pub use error::CliError;
