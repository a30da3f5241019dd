use crate::lattice::LocalFunction;
use crate::scalar::Scalar;

/// γ(ρ) = Σ_z z·ν_ρ(γ_z).
pub fn drift_gamma<T: Scalar>(jumps: &[(i64, LocalFunction)], rho: T) -> T {
    jumps.iter().fold(T::zero(), |acc, (z, f)| {
        acc + T::of(*z as f64) * f.product_expectation(rho)
    })
}

/// max |γ(ρ)| over ρ ∈ [0, 1], from the endpoints and a grid of 1000 points,
/// rounded up by 1%; γ is a polynomial, so this bounds the transport speed
/// used for domain sizing.
pub fn drift_speed_bound<T: Scalar>(jumps: &[(i64, LocalFunction)]) -> T {
    let grid = 1000;
    let sup = (0..=grid)
        .map(|k| drift_gamma(jumps, T::from_count(k) / T::from_count(grid)).abs())
        .fold(T::zero(), T::max);
    let ends = drift_gamma(jumps, T::zero())
        .abs()
        .max(drift_gamma(jumps, T::one()).abs());
    if sup <= ends {
        ends
    } else {
        sup * T::of(1.01)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::WalkerRates;

    #[test]
    fn base_model_drift() {
        let r = WalkerRates::new(2.0, 1.0).unwrap();
        let jumps = r.as_jump_table();
        for rho in [0.0f64, 0.2, 0.5, 0.9, 1.0] {
            assert!((drift_gamma(&jumps, rho) - r.drift(rho)).abs() < 1e-15);
        }
        assert_eq!(drift_speed_bound::<f64>(&jumps), 1.0);
    }

    #[test]
    fn trivial_maps() {
        let zero = vec![(1, LocalFunction::constant(0.0).unwrap())];
        assert_eq!(drift_gamma(&zero, 0.3), 0.0);
        assert_eq!(drift_gamma::<f64>(&[], 0.3), 0.0);
        let two = vec![(2, LocalFunction::constant(1.5).unwrap())];
        for rho in [0.0, 0.4, 1.0] {
            assert_eq!(drift_gamma(&two, rho), 3.0);
        }
        assert_eq!(drift_gamma(&two, 0.4f32), 3.0f32);
    }
}
