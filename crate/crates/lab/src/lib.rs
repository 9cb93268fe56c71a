//! Experiment runner around `dstab-core`: flag and config parsing, CSV and
//! SVG output, and the `dstab` command line.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod figures;
pub mod parse;
pub mod svg;

pub use cli::main_with_args;
pub use error::{CliError, CliResult};
