//! Experiment harness for rank-one unit-modulus matrix sensing: a rayon executor,
//! binary ensemble files, CSV experiment drivers with run manifests, and the CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod executor;
pub mod experiments;
pub mod format;
pub mod manifest;
pub mod selftest;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use executor::RayonExecutor;
pub use experiments::Table;
