//! File formats, configuration and the `penrose` command line on top of
//! [`penrose_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod forms;
pub mod output;
pub mod profile;

pub use error::{CliError, Result};
