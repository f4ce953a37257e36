//! Experiment runner for the beamforming library: convergence, PEP, BLER and
//! training-overhead studies driven by JSON configs or named presets.

pub mod config;
pub mod error;
pub mod manifest;
pub mod presets;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, GridSpec, SchemeSpec};
pub use error::{CliError, CliResult};
pub use manifest::{OutputEntry, RunManifest};
pub use runner::{run_experiment, RunOptions};
