use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, XwalkError};
use crate::lattice::{Profile, ProfileShape};
use crate::scalar::Scalar;

/// Standard normal distribution function.
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    T::of(0.5 * libm::erfc(-x.as_f64() / std::f64::consts::SQRT_2))
}

/// Discretization of a macroscopic problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams<T> {
    pub dx: T,
    pub dt: T,
    /// Half-width X of the domain [−X, X]; chosen from the data when `None`.
    pub half_width: Option<T>,
    /// κ in ∂_t u = κ ∂²_x u.
    pub diffusivity: T,
    /// Keep every k-th time level (the last one is always kept).
    pub save_every: usize,
    /// Number of leading Crank–Nicolson steps replaced by two backward-Euler
    /// half steps each.
    pub startup_steps: usize,
}

impl<T: Scalar> GridParams<T> {
    /// Δx = 0.01, Δt = 2.5·10⁻⁴, κ = 1.
    pub fn standard() -> Self {
        Self {
            dx: T::of(0.01),
            dt: T::of(2.5e-4),
            half_width: None,
            diffusivity: T::one(),
            save_every: 1,
            startup_steps: 2,
        }
    }

    pub fn with_resolution(mut self, dx: T, dt: T) -> Self {
        self.dx = dx;
        self.dt = dt;
        self
    }

    pub fn with_half_width(mut self, x: T) -> Self {
        self.half_width = Some(x);
        self
    }

    pub fn with_diffusivity(mut self, kappa: T) -> Self {
        self.diffusivity = kappa;
        self
    }

    pub fn with_save_every(mut self, k: usize) -> Self {
        self.save_every = k.max(1);
        self
    }

    /// Both steps divided by `factor`.
    pub fn refined(mut self, factor: usize) -> Self {
        let f = T::from_count(factor);
        self.dx = self.dx / f;
        self.dt = self.dt / f;
        self.save_every *= factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.dx) {
            return Err(invalid("dx", format!("{} must be positive", self.dx)));
        }
        if !pos(self.dt) {
            return Err(invalid("dt", format!("{} must be positive", self.dt)));
        }
        if !pos(self.diffusivity) {
            return Err(invalid("diffusivity", format!("{} must be positive", self.diffusivity)));
        }
        if let Some(x) = self.half_width {
            if !pos(x) {
                return Err(invalid("half_width", format!("{x} must be positive")));
            }
        }
        Ok(())
    }
}

/// Half-width |v|T + 6√(2κT) + diameter of the non-constant region.
pub fn default_half_width<T: Scalar>(profile: &Profile, speed: T, horizon: T, kappa: T) -> T {
    let (a, b) = profile.transition_region().unwrap_or((0.0, 0.0));
    let diam = T::of(a.abs().max(b.abs()));
    speed.abs() * horizon + T::of(6.0) * (T::of(2.0) * kappa * horizon).sqrt() + diam
}

/// Something that can be evaluated as a density u(t, x).
pub trait DensityField<T: Scalar> {
    fn density(&self, t: T, x: T) -> Result<T>;
    /// Spatial interval on which the field is defined.
    fn x_range(&self) -> (T, T);
}

/// u ≡ ρ.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField<T>(pub T);

impl<T: Scalar> DensityField<T> for ConstantField<T> {
    fn density(&self, _t: T, _x: T) -> Result<T> {
        Ok(self.0)
    }
    fn x_range(&self) -> (T, T) {
        (T::neg_infinity(), T::infinity())
    }
}

/// Exact solution of ∂_t u = κ∂²_x u for piecewise-constant initial data:
/// u(t, x) = v₀ + Σ_i (v_i − v_{i−1}) N((x − b_i)/√(2κt)).
///
/// At t = 0 the value at a jump is the mean of the one-sided limits.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSolution<T> {
    base: T,
    jumps: Vec<(T, T)>,
    kappa: T,
    shift: T,
}

impl<T: Scalar> HeatSolution<T> {
    pub fn new(profile: &Profile, kappa: T) -> Result<Self> {
        let (breakpoints, values): (Vec<f64>, Vec<f64>) = match &profile.shape {
            ProfileShape::Constant { value } => (vec![], vec![*value]),
            ProfileShape::Step { left, right } => (vec![0.0], vec![*left, *right]),
            ProfileShape::Piecewise { breakpoints, values } => (breakpoints.clone(), values.clone()),
            ProfileShape::Ramp { .. } => {
                return Err(XwalkError::Unsupported(
                    "closed-form heat solution needs piecewise-constant data".into(),
                ))
            }
        };
        let jumps = breakpoints
            .iter()
            .zip(values.windows(2))
            .map(|(&b, v)| (T::of(b), T::of(v[1] - v[0])))
            .collect();
        Ok(Self {
            base: T::of(values[0]),
            jumps,
            kappa,
            shift: T::zero(),
        })
    }

    /// The same solution read in a frame moved by `shift`: x ↦ u(t, x + shift).
    pub fn shifted(&self, shift: T) -> Self {
        Self { shift, ..self.clone() }
    }

    pub fn eval(&self, t: T, x: T) -> T {
        let x = x + self.shift;
        let half = T::of(0.5);
        let mut u = self.base;
        if t <= T::zero() {
            for &(b, d) in &self.jumps {
                if x > b {
                    u = u + d;
                } else if x == b {
                    u = u + half * d;
                }
            }
            return u;
        }
        let s = (T::of(2.0) * self.kappa * t).sqrt();
        for &(b, d) in &self.jumps {
            u = u + d * normal_cdf((x - b) / s);
        }
        u
    }
}

impl<T: Scalar> DensityField<T> for HeatSolution<T> {
    fn density(&self, t: T, x: T) -> Result<T> {
        Ok(self.eval(t, x))
    }
    fn x_range(&self) -> (T, T) {
        (T::neg_infinity(), T::infinity())
    }
}

/// Values u(t_k, x_i) on a uniform grid x_i = x_min + i·Δx.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeGrid<T> {
    pub x_min: T,
    pub dx: T,
    pub nx: usize,
    /// Internal time step.
    pub dt: T,
    /// Stored time levels.
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> PdeGrid<T> {
    pub fn x(&self, i: usize) -> T {
        self.x_min + T::from_count(i) * self.dx
    }

    pub fn x_max(&self) -> T {
        self.x(self.nx - 1)
    }

    /// Node index of x if x is (up to rounding) a grid node.
    pub fn node(&self, x: T) -> Option<usize> {
        let s = (x - self.x_min) / self.dx;
        let i = s.round();
        ((s - i).abs() < T::of(1e-6) && i >= T::zero() && i < T::from_count(self.nx)).then(|| i.to_usize().unwrap())
    }

    pub fn last(&self) -> &[T] {
        &self.values[self.values.len() - 1]
    }

    pub fn final_time(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// Linear interpolation in x at a stored level.
    pub fn at_level(&self, k: usize, x: T) -> Result<T> {
        let (lo, hi) = (self.x_min, self.x_max());
        if !(x >= lo && x <= hi) {
            return Err(XwalkError::DomainExhausted {
                t: self.times[k].as_f64(),
                x: x.as_f64(),
            });
        }
        let s = (x - lo) / self.dx;
        let i = s.floor().to_usize().unwrap().min(self.nx - 2);
        let w = s - T::from_count(i);
        let row = &self.values[k];
        Ok(row[i] + w * (row[i + 1] - row[i]))
    }

    /// Bilinear interpolation in (t, x).
    pub fn eval(&self, t: T, x: T) -> Result<T> {
        let t0 = self.times[0];
        let t1 = self.final_time();
        let tol = T::of(1e-12) * (T::one() + t1.abs());
        if !(t >= t0 - tol && t <= t1 + tol) {
            return Err(XwalkError::DomainExhausted {
                t: t.as_f64(),
                x: x.as_f64(),
            });
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.at_level(0, x);
        }
        if k >= self.times.len() {
            return self.at_level(self.times.len() - 1, x);
        }
        let (ta, tb) = (self.times[k - 1], self.times[k]);
        let w = (t - ta) / (tb - ta);
        let a = self.at_level(k - 1, x)?;
        let b = self.at_level(k, x)?;
        Ok(a + w * (b - a))
    }

    /// Trapezoidal ∫ u dx at a stored level.
    pub fn mass(&self, k: usize) -> T {
        let row = &self.values[k];
        let half = T::of(0.5);
        let inner = row[1..self.nx - 1].iter().fold(T::zero(), |a, &v| a + v);
        (inner + half * (row[0] + row[self.nx - 1])) * self.dx
    }

    /// Largest excursion of any value outside [lo, hi].
    pub fn max_principle_violation(&self, lo: T, hi: T) -> T {
        let mut worst = T::zero();
        for row in &self.values {
            for &v in row {
                worst = worst.max(lo - v).max(v - hi);
            }
        }
        worst
    }
}

impl<T: Scalar> DensityField<T> for PdeGrid<T> {
    fn density(&self, t: T, x: T) -> Result<T> {
        self.eval(t, x)
    }
    fn x_range(&self) -> (T, T) {
        (self.x_min, self.x_max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0f64), 0.5);
        assert!((normal_cdf(1.959963984540054f64) - 0.975).abs() < 1e-12);
        assert!((normal_cdf(-1.0f32) - 0.158_655_25).abs() < 1e-6);
    }

    #[test]
    fn closed_form_step() {
        let p = Profile::step(1.0, 0.0).unwrap();
        let h = HeatSolution::<f64>::new(&p, 0.5).unwrap();
        for t in [0.0, 0.01, 0.3, 2.0] {
            assert!((h.eval(t, 0.0) - 0.5).abs() < 1e-15);
        }
        // κ = 1/2: N(x/√t)
        assert!((h.eval(0.25, 0.5) - (1.0 - normal_cdf(1.0))).abs() < 1e-15);
        let piece = Profile::piecewise(vec![-1.0, 1.0], vec![0.2, 0.9, 0.2]).unwrap();
        let h = HeatSolution::<f64>::new(&piece, 1.0).unwrap();
        assert!((h.eval(1e-9, 0.0) - 0.9).abs() < 1e-12);
        assert!((h.eval(1e-9, 5.0) - 0.2).abs() < 1e-12);
        assert!(HeatSolution::<f64>::new(&Profile::ramp(0.1, 0.2, 1.0).unwrap(), 1.0).is_err());
    }
}
