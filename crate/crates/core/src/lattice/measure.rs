use serde::{Deserialize, Serialize};

use crate::error::{Result, XwalkError};
use crate::lattice::profile::Profile;
use crate::lattice::state::Window;
use crate::scalar::Scalar;
use crate::stats::CompensatedSum;

/// Relative entropy of Bernoulli(p) with respect to Bernoulli(q), 0·log 0 = 0.
pub fn bernoulli_kl<T: Scalar>(p: T, q: T) -> T {
    let one = T::one();
    let term = |a: T, b: T| if a == T::zero() { T::zero() } else { a * (a / b).ln() };
    term(p, q) + term(one - p, one - q)
}

fn check_density(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(XwalkError::InvalidDensity(format!(
            "reference density {rho} must lie in (0, 1)"
        )))
    }
}

/// H(μ^n | ν_ρ) restricted to a window: Σ_x KL(u₀(x/n) ‖ ρ).
pub fn relative_entropy_profile<T: Scalar>(profile: &Profile, rho: T, n: u32, window: Window) -> Result<T> {
    check_density(rho.as_f64())?;
    if n == 0 {
        return Err(XwalkError::InvalidParameter {
            name: "n",
            reason: "scale must be at least 1".into(),
        });
    }
    let scale = n as f64;
    let mut sum = CompensatedSum::<T>::new();
    for x in window.lo..=window.hi {
        sum.add(bernoulli_kl(T::of(profile.eval(x as f64 / scale)), rho));
    }
    Ok(sum.value())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfEquilibriumReport {
    pub rho: f64,
    pub n_list: Vec<u32>,
    /// (1/n) Σ_{x∈ℤ} |u₀(x/n) − ρ|²; infinite when u₀ does not settle at ρ.
    pub values: Vec<f64>,
    /// The same sums truncated to [−⌈Kn⌉, ⌈Kn⌉], when a window factor is given.
    pub windowed: Option<Vec<f64>>,
    pub sup: f64,
    pub bounded: bool,
    /// Set when the sums diverge on the whole lattice.
    pub warning: Option<String>,
}

fn squared_deviation_sum(profile: &Profile, rho: f64, n: u32, lo: i64, hi: i64) -> f64 {
    let scale = n as f64;
    let mut sum = CompensatedSum::<f64>::new();
    for x in lo..=hi {
        let d = profile.eval(x as f64 / scale) - rho;
        sum.add(d * d);
    }
    sum.value() / scale
}

/// Evaluates (1/n) Σ_x |u₀(x/n) − ρ|² for each n and flags growth.
///
/// The sequence is reported bounded when every value is finite and the last
/// value does not exceed twice the first.
pub fn check_out_of_equilibrium(
    profile: &Profile,
    rho: f64,
    n_list: &[u32],
    window_factor: Option<f64>,
) -> Result<OutOfEquilibriumReport> {
    check_density(rho)?;
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(XwalkError::InvalidParameter {
            name: "n_list",
            reason: "needs at least one positive scale".into(),
        });
    }
    let settles = profile.left_limit() == rho && profile.right_limit() == rho;
    let values: Vec<f64> = n_list
        .iter()
        .map(|&n| {
            if !settles {
                return f64::INFINITY;
            }
            match profile.transition_region() {
                None => 0.0,
                Some((a, b)) => {
                    let s = n as f64;
                    squared_deviation_sum(profile, rho, n, (a * s).floor() as i64 - 1, (b * s).ceil() as i64 + 1)
                }
            }
        })
        .collect();
    let windowed = match window_factor {
        Some(k) => Some(
            n_list
                .iter()
                .map(|&n| {
                    let w = Window::symmetric(n, k)?;
                    Ok(squared_deviation_sum(profile, rho, n, w.lo, w.hi))
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
        None => None,
    };
    let sup = values.iter().copied().fold(0.0, f64::max);
    let bounded = values.iter().all(|v| v.is_finite()) && values[values.len() - 1] <= 2.0 * values[0] + 1e-12;
    let warning = (!settles).then(|| {
        format!(
            "profile tends to ({}, {}) at (-inf, +inf), not to rho = {rho}; the sum diverges",
            profile.left_limit(),
            profile.right_limit()
        )
    });
    Ok(OutOfEquilibriumReport {
        rho,
        n_list: n_list.to_vec(),
        values,
        windowed,
        sup,
        bounded,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_has_zero_entropy_and_deviation() {
        let p = Profile::constant(0.3).unwrap();
        let w = Window::new(-50, 50).unwrap();
        assert_eq!(relative_entropy_profile(&p, 0.3, 10, w).unwrap(), 0.0);
        let r = check_out_of_equilibrium(&p, 0.3, &[10, 20], None).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
        assert!(r.bounded && r.warning.is_none());
    }

    #[test]
    fn entropy_rejects_degenerate_reference() {
        let p = Profile::constant(0.3).unwrap();
        let w = Window::new(-5, 5).unwrap();
        assert!(relative_entropy_profile(&p, 0.0, 10, w).is_err());
        assert!(relative_entropy_profile(&p, 1.0, 10, w).is_err());
    }

    #[test]
    fn zero_log_zero_convention() {
        assert_eq!(bernoulli_kl(0.0, 0.5), 2f64.ln());
        assert_eq!(bernoulli_kl(1.0, 0.25), 4f64.ln());
        assert_eq!(bernoulli_kl(0.0f32, 0.5), 2f32.ln());
    }
}
