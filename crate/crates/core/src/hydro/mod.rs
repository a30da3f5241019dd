//! Solvers for the macroscopic limits: diffusion of the environment, the
//! walker's ordinary differential equation and the transport equation in the
//! walker frame.

mod drift;
mod grid;
mod ode;
mod solver;
mod tridiag;

pub use drift::{drift_gamma, drift_speed_bound};
pub use grid::{default_half_width, normal_cdf, ConstantField, DensityField, GridParams, HeatSolution, PdeGrid};
pub use ode::{solve_drift_ode, solve_walker_ode, WalkerPath};
pub use solver::{
    solve_general_pde, solve_heat, solve_phi_diffusion, solve_shifted_pde, solve_transport_pde, ShiftedSolution,
};
pub use tridiag::solve_tridiagonal;
