//! Command-line front end: experiment presets, config files, CSV traces,
//! SVG plots and the verification suite.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod runner;
pub mod spec;
pub mod studies;
pub mod svg;
pub mod verify;

pub use error::{CliError, Result};
pub use spec::ExperimentSpec;
