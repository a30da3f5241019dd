use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, XwalkError};
use crate::hydro::grid::DensityField;
use crate::lattice::WalkerRates;
use crate::scalar::Scalar;

/// Solution of f′ = γ(u(t, f)), f(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkerPath<T> {
    pub times: Vec<T>,
    pub f: Vec<T>,
    /// f′(t_k) = γ(u(t_k, f(t_k))).
    pub drift: Vec<T>,
    /// sup_k |f(t_k) − ∫₀^{t_k} γ(u(s, f(s))) ds|.
    pub residual: T,
}

impl<T: Scalar> WalkerPath<T> {
    /// f at time t by cubic Hermite interpolation between steps.
    pub fn at(&self, t: T) -> T {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.f[0];
        }
        if k >= self.times.len() {
            return self.f[self.f.len() - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let one = T::one();
        let two = T::of(2.0);
        let three = T::of(3.0);
        let h00 = two * s * s * s - three * s * s + one;
        let h10 = s * s * s - two * s * s + s;
        let h01 = -two * s * s * s + three * s * s;
        let h11 = s * s * s - s * s;
        h00 * self.f[k - 1] + h10 * h * self.drift[k - 1] + h01 * self.f[k] + h11 * h * self.drift[k]
    }

    /// max_k |f(t_k) − f(t_j)| / |t_k − t_j| over consecutive steps.
    pub fn lipschitz(&self) -> T {
        self.times
            .windows(2)
            .zip(self.f.windows(2))
            .map(|(t, f)| (f[1] - f[0]).abs() / (t[1] - t[0]))
            .fold(T::zero(), T::max)
    }
}

/// RK4 for f′ = γ(u(t, f)) with an integral-equation residual computed by
/// Simpson's rule (midpoint state from the cubic Hermite interpolant).
pub fn solve_drift_ode<T: Scalar>(
    field: &dyn DensityField<T>,
    drift: &dyn Fn(T) -> T,
    horizon: T,
    dt: T,
) -> Result<WalkerPath<T>> {
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(invalid("horizon", format!("{horizon} must be positive")));
    }
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    let (lo, hi) = field.x_range();
    let g = |t: T, x: T| -> Result<T> {
        if !(x >= lo && x <= hi) {
            return Err(XwalkError::DomainExhausted {
                t: t.as_f64(),
                x: x.as_f64(),
            });
        }
        Ok(drift(field.density(t, x)?))
    };
    let steps = (horizon / dt - T::of(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
    let h = horizon / T::from_count(steps);
    let half = T::of(0.5);
    let two = T::of(2.0);
    let six = T::of(6.0);
    let eighth = T::of(0.125);

    let mut times = Vec::with_capacity(steps + 1);
    let mut f = Vec::with_capacity(steps + 1);
    let mut drifts = Vec::with_capacity(steps + 1);
    let mut x = T::zero();
    let mut gx = g(T::zero(), x)?;
    times.push(T::zero());
    f.push(x);
    drifts.push(gx);
    let mut integral = T::zero();
    let mut residual = T::zero();
    for k in 0..steps {
        let t = T::from_count(k) * h;
        let k1 = gx;
        let k2 = g(t + half * h, x + half * h * k1)?;
        let k3 = g(t + half * h, x + half * h * k2)?;
        let k4 = g(t + h, x + h * k3)?;
        let x_next = x + h / six * (k1 + two * k2 + two * k3 + k4);
        let t_next = T::from_count(k + 1) * h;
        let g_next = g(t_next, x_next)?;
        let x_mid = half * (x + x_next) + eighth * h * (gx - g_next);
        let g_mid = g(t + half * h, x_mid)?;
        integral = integral + h / six * (gx + T::of(4.0) * g_mid + g_next);
        residual = residual.max((x_next - integral).abs());
        x = x_next;
        gx = g_next;
        times.push(t_next);
        f.push(x);
        drifts.push(gx);
    }
    Ok(WalkerPath {
        times,
        f,
        drift: drifts,
        residual,
    })
}

/// f′ = (β − α)(1 − 2u(t, f)).
pub fn solve_walker_ode<T: Scalar>(
    field: &dyn DensityField<T>,
    rates: &WalkerRates,
    horizon: T,
    dt: T,
) -> Result<WalkerPath<T>> {
    let drift = |rho: T| rates.drift(rho);
    solve_drift_ode(field, &drift, horizon, dt)
}
