//! Command-line front end for the certification menu solvers.

pub mod args;
pub mod report;
pub mod run;

pub use args::Cli;
pub use run::{run, CliError};
