//! Command-line driver for the `rationing` crate: configuration files,
//! analysis subcommands, CSV/JSON reports and the reproduction harness for
//! the published examples.

#![forbid(unsafe_code)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod reproduce;

pub use error::{CliError, CliResult};
