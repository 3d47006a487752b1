//! File formats, configuration and the batch pipeline around `pedwait-core`.
//!
//! The `pedwait` binary is a thin clap front end over [`commands`]; everything it
//! does is reachable from here so tests can drive the pipeline in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod model_file;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
