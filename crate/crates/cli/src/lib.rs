//! Config parsing and command execution behind the `thermo` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, serialize, validate, Command, ConfigError, ConfigErrors, RunConfig};
pub use run::{run, RunOutcome, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_OK};
