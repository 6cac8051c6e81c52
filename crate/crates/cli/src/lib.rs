//! Command-line front end: argument and config-file parsing plus dispatch.

pub mod config;
pub mod run;

pub use config::{parse_args, Job, ParseFailure, RunConfig, Subcommand, UsageError};
pub use run::run;
