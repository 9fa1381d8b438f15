//! Experiment runner for `cgl-steer`: JSON configs, presets for the
//! acceptance experiments, self-describing run directories and plot data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod plotdata;
pub mod presets;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, FieldSpec, TargetSpec};
pub use error::CliError;
pub use manifest::RunManifest;
pub use runner::{run, RunOutcome};
