//! Batch runner for phlab experiments: JSON configs in, reports out.

pub mod config;
pub mod error;
pub mod registry;
pub mod runner;

pub use config::{ExperimentConfig, ModelSpec, Overrides};
pub use error::CliError;
pub use runner::{run, RunOutput};
