//! Configuration loading and mode dispatch for the `delta-eita` binary.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, Mode, RunConfig};
pub use error::CliError;
pub use run::{run, worker_count};
