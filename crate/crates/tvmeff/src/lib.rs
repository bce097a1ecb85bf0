//! IO, configuration and pipeline orchestration around `tvmeff-core`.

pub mod config;
pub mod error;
pub mod io;
pub mod output;
pub mod parallel;
pub mod pipeline;

pub use error::{CliError, CliResult, ErrorKind};
