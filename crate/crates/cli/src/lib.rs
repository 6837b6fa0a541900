//! Command-line front end: CSV ingestion, key = value configuration, the
//! detection and plot-data commands, and the Monte-Carlo experiment runner.

pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod experiment;
pub mod report;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
