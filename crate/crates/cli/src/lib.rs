//! Library side of the `qkd-sift` binary. Reports are produced by
//! [`runner::run`] followed by [`report::emit_report`].

pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod verify;

pub use config::{emit_config, load_config, parse_config, Mode, OutputFormat, RunConfig, SweepAxis, SweepSpec};
pub use error::CliError;
pub use report::{emit_report, render};
pub use runner::{execute, run, Results};
