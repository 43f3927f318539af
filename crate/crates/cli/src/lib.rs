//! Reproducible experiment runner for `qsd-core`.

pub mod args;
pub mod chain_file;
pub mod config;
pub mod runner;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use runner::{run_experiment, RunOutcome};
