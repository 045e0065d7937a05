//! File formats, configuration and command implementations for the `dbpim`
//! tool. The algorithms live in `dbpim-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod trace;

pub use config::ConfigFile;
pub use error::{CliError, Result};
