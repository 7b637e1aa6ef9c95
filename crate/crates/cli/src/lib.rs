//! File formats, configuration and the `emt` command-line driver for
//! [`emt_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use error::{CliError, CliResult, FormatError};
