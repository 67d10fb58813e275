//! Experiment harness for the bnbench toolkit.

pub mod config;
pub mod experiment;
pub mod report;
pub mod synth;

pub use config::{ExperimentConfig, MissingPolicy};
pub use experiment::{run_experiment, ReportRow};
