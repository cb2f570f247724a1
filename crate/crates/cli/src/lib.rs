//! Command-line front end: configuration, image and CSV output.

pub mod config;
pub mod output;
pub mod report;
pub mod run;

pub use config::{Cli, RunConfig};
pub use run::execute;
