//! Microscopic configurations, initial profiles and product-measure computations.

mod local;
mod measure;
mod profile;
mod state;

pub use local::{LocalFunction, WalkerRates, MAX_RADIUS};
pub use measure::{bernoulli_kl, check_out_of_equilibrium, relative_entropy_profile, OutOfEquilibriumReport};
pub use profile::{Profile, ProfileShape};
pub use state::{sample_initial, Boundary, LatticeState, Window, HALO};

use crate::scalar::Scalar;

/// ν_ρ(f) for a local function.
pub fn product_expectation<T: Scalar>(f: &LocalFunction, rho: T) -> T {
    f.product_expectation(rho)
}
