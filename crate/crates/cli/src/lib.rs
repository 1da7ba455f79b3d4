//! Command-line front end for the call money market simulator: experiment
//! manifests, a multi-threaded ensemble driver, CSV output and the
//! `callmoney` subcommands.

pub mod cli;
pub mod commands;
pub mod csv;
pub mod error;
pub mod manifest;
pub mod parallel;

pub use crate::cli::run;
pub use crate::error::{exit, CliError};
pub use crate::manifest::{parse_config, ExperimentManifest, ManifestLayer};
