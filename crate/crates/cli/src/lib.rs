//! CLI wiring for the twin-prime census pipeline.

pub mod args;
pub mod commands;

use anyhow::Result;

pub use args::{Command, RunConfig};

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(config: &RunConfig) -> Result<i32> {
    match &config.command {
        Command::Census(args) => commands::cmd_census(args),
        Command::Fit(args) => commands::cmd_fit(args),
        Command::Predict(args) => commands::cmd_predict(args),
        Command::Compare(args) => commands::cmd_compare(args),
    }
}
