//! Simulation and analysis of a random walk driven by the symmetric simple
//! exclusion process, under diffusive scaling of the environment and ballistic
//! scaling of the walker.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hydro;
pub mod kmc;
pub mod lattice;
pub mod macrojump;
pub mod observables;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Result, XwalkError};
pub use scalar::Scalar;

pub type GridParams = hydro::GridParams<f64>;
pub type PdeGrid = hydro::PdeGrid<f64>;
pub type HeatSolution = hydro::HeatSolution<f64>;
pub type ShiftedSolution = hydro::ShiftedSolution<f64>;
pub type WalkerPath = hydro::WalkerPath<f64>;
pub type GeneratorMatrix = oracle::GeneratorMatrix<f64>;
pub type DensityVector = oracle::DensityVector<f64>;
