//! File formats, configuration and the command-line driver for
//! `fusemine-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
