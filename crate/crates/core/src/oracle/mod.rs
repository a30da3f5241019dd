//! Exact linear algebra for the environment seen from the walker on a small ring.

mod checks;
mod generator;
mod ring;

pub use checks::{
    carre_du_champ, check_dirichlet_bound, dirichlet_form, dirichlet_quadratic, entropy_decay_probe, evolve, expm,
    integrated_expectation, invariance_residual, noninvariance_witness, nu_inner, quadratic_variation_identity,
    relative_entropy, reversibility_residual, DensityVector, DirichletReport, DirichletTrial, MartingaleCheck,
    QuadraticVariationReport,
};
pub use generator::{simple_exclusion, GeneratorMatrix, Transition, TransitionKind};
pub use ring::RingSpace;
