//! Command-line driver: configuration parsing, dispatch and output files.

pub mod config;
pub mod run;

pub use config::{ConfigError, ConfigFile};
pub use run::{dispatch, CliError, Command, RunManifest, RunSummary};
