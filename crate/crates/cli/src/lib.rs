//! Batch front end: each subcommand is described by a [`config::RunConfig`],
//! written next to its outputs so the run can be repeated.

pub mod commands;
pub mod config;

pub use commands::{execute, exit_code, output_dir, Outcome, OUT_DIR_ENV};
pub use config::{DumpTimes, RunConfig, Target};

/// Acceptance failures exit with this status.
pub const EXIT_REJECTED: u8 = 4;
