//! Config-driven experiment runner behind the `vlcov` binary.

pub mod config;
pub mod run;

pub use config::{ConfigError, Engine, ExperimentConfig, NamedLocation};
pub use run::{execute, run, Command, Report, RunError};
