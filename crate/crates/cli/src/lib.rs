//! Experiment orchestration for xwalk: configuration, replica farms, CSV and
//! plot output, and the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod plots;
pub mod sweeps;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiment::{run_experiment, ConvergenceReport, Experiment};
