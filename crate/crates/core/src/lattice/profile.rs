use serde::{Deserialize, Serialize};

use crate::error::{Result, XwalkError};

/// Shape of a macroscopic initial density u₀: ℝ → [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileShape {
    Constant {
        value: f64,
    },
    /// `left` on (−∞, 0), `right` on [0, ∞).
    Step {
        left: f64,
        right: f64,
    },
    /// Cosine ramp from `left` to `right` across [−width/2, width/2].
    Ramp {
        left: f64,
        right: f64,
        width: f64,
    },
    /// Piecewise constant: `values[0]` on (−∞, b₀), `values[i]` on [b_{i−1}, b_i),
    /// the last value on [b_last, ∞).
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Initial profile together with the reference density ρ used for entropy and
/// out-of-equilibrium checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub shape: ProfileShape,
    pub reference_density: f64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(XwalkError::InvalidProfile(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

impl Profile {
    pub fn new(shape: ProfileShape, reference_density: f64) -> Result<Self> {
        let p = Self {
            shape,
            reference_density,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn constant(value: f64) -> Result<Self> {
        let reference = if value > 0.0 && value < 1.0 { value } else { 0.5 };
        Self::new(ProfileShape::Constant { value }, reference)
    }

    /// Step at the origin; the reference density defaults to the right value
    /// when it lies in (0, 1).
    pub fn step(left: f64, right: f64) -> Result<Self> {
        let reference = if right > 0.0 && right < 1.0 { right } else { 0.5 };
        Self::new(ProfileShape::Step { left, right }, reference)
    }

    pub fn ramp(left: f64, right: f64, width: f64) -> Result<Self> {
        let reference = if right > 0.0 && right < 1.0 { right } else { 0.5 };
        Self::new(ProfileShape::Ramp { left, right, width }, reference)
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let last = values.last().copied().unwrap_or(0.5);
        let reference = if last > 0.0 && last < 1.0 { last } else { 0.5 };
        Self::new(ProfileShape::Piecewise { breakpoints, values }, reference)
    }

    pub fn with_reference(mut self, rho: f64) -> Result<Self> {
        self.reference_density = rho;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_density > 0.0 && self.reference_density < 1.0) {
            return Err(XwalkError::InvalidProfile(format!(
                "reference density {} is outside (0, 1)",
                self.reference_density
            )));
        }
        match &self.shape {
            ProfileShape::Constant { value } => check_unit("value", *value),
            ProfileShape::Step { left, right } => {
                check_unit("left", *left)?;
                check_unit("right", *right)
            }
            ProfileShape::Ramp { left, right, width } => {
                check_unit("left", *left)?;
                check_unit("right", *right)?;
                if !(*width > 0.0 && width.is_finite()) {
                    return Err(XwalkError::InvalidProfile(format!(
                        "ramp width {width} must be positive"
                    )));
                }
                Ok(())
            }
            ProfileShape::Piecewise { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(XwalkError::InvalidProfile(format!(
                        "{} breakpoints need {} values, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        values.len()
                    )));
                }
                if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(XwalkError::InvalidProfile(
                        "breakpoints must be finite and strictly increasing".into(),
                    ));
                }
                values.iter().try_for_each(|v| check_unit("value", *v))
            }
        }
    }

    /// u₀(x), right-continuous at jumps.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            ProfileShape::Constant { value } => *value,
            ProfileShape::Step { left, right } => {
                if x < 0.0 {
                    *left
                } else {
                    *right
                }
            }
            ProfileShape::Ramp { left, right, width } => {
                let h = 0.5 * width;
                if x <= -h {
                    *left
                } else if x >= h {
                    *right
                } else {
                    let s = 0.5 * (1.0 - (std::f64::consts::PI * (x + h) / width).cos());
                    left + (right - left) * s
                }
            }
            ProfileShape::Piecewise { breakpoints, values } => values[breakpoints.partition_point(|&b| b <= x)],
        }
    }

    /// Exact ∫_a^b u₀(x) dx.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integral(b, a);
        }
        match &self.shape {
            ProfileShape::Constant { value } => value * (b - a),
            ProfileShape::Step { left, right } => left * (b.min(0.0) - a.min(0.0)) + right * (b.max(0.0) - a.max(0.0)),
            ProfileShape::Ramp { left, right, width } => {
                let h = 0.5 * width;
                let lo = a.clamp(-h, h);
                let hi = b.clamp(-h, h);
                let k = std::f64::consts::PI / width;
                // antiderivative of left + (right-left)(1 - cos(k(x+h)))/2
                let anti = |x: f64| left * x + (right - left) * 0.5 * (x - (k * (x + h)).sin() / k);
                left * (b.min(-h) - a).max(0.0) + (anti(hi) - anti(lo)) + right * (b - a.max(h)).max(0.0)
            }
            ProfileShape::Piecewise { breakpoints, values } => {
                let mut total = 0.0;
                let mut lo = a;
                for (i, &v) in values.iter().enumerate() {
                    let seg_hi = breakpoints.get(i).copied().unwrap_or(f64::INFINITY);
                    let hi = b.min(seg_hi);
                    if hi > lo {
                        total += v * (hi - lo);
                        lo = hi;
                    }
                    if lo >= b {
                        break;
                    }
                }
                total
            }
        }
    }

    /// Average of u₀ over [a, b].
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        if b == a {
            self.eval(a)
        } else {
            self.integral(a, b) / (b - a)
        }
    }

    /// Limit of u₀ at −∞.
    pub fn left_limit(&self) -> f64 {
        match &self.shape {
            ProfileShape::Constant { value } => *value,
            ProfileShape::Step { left, .. } | ProfileShape::Ramp { left, .. } => *left,
            ProfileShape::Piecewise { values, .. } => values[0],
        }
    }

    /// Limit of u₀ at +∞.
    pub fn right_limit(&self) -> f64 {
        match &self.shape {
            ProfileShape::Constant { value } => *value,
            ProfileShape::Step { right, .. } | ProfileShape::Ramp { right, .. } => *right,
            ProfileShape::Piecewise { values, .. } => values[values.len() - 1],
        }
    }

    /// Bounded interval outside of which u₀ equals its far-field constants,
    /// or `None` for a constant profile.
    pub fn transition_region(&self) -> Option<(f64, f64)> {
        match &self.shape {
            ProfileShape::Constant { .. } => None,
            ProfileShape::Step { .. } => Some((0.0, 0.0)),
            ProfileShape::Ramp { width, .. } => Some((-0.5 * width, 0.5 * width)),
            ProfileShape::Piecewise { breakpoints, .. } => {
                if breakpoints.is_empty() {
                    None
                } else {
                    Some((breakpoints[0], breakpoints[breakpoints.len() - 1]))
                }
            }
        }
    }

    pub fn min_value(&self) -> f64 {
        self.extreme(f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.extreme(f64::max)
    }

    fn extreme(&self, pick: fn(f64, f64) -> f64) -> f64 {
        match &self.shape {
            ProfileShape::Constant { value } => *value,
            ProfileShape::Step { left, right } | ProfileShape::Ramp { left, right, .. } => pick(*left, *right),
            ProfileShape::Piecewise { values, .. } => values.iter().copied().reduce(pick).unwrap_or(0.0),
        }
    }

    /// Piecewise-constant lattice discretization: value u₀(z/n) on [z/n, (z+1)/n)
    /// for z in `lo..=hi`, far-field values outside.
    pub fn discretize(&self, n: u32, lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(XwalkError::InvalidWindow(format!("empty range [{lo}, {hi}]")));
        }
        let scale = n as f64;
        let breakpoints: Vec<f64> = (lo..=hi + 1).map(|z| z as f64 / scale).collect();
        let mut values = Vec::with_capacity(breakpoints.len() + 1);
        values.push(self.left_limit());
        values.extend((lo..=hi).map(|z| self.eval(z as f64 / scale)));
        values.push(self.right_limit());
        Self::new(ProfileShape::Piecewise { breakpoints, values }, self.reference_density)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_unsorted() {
        assert!(Profile::constant(1.2).is_err());
        assert!(Profile::step(-0.1, 0.5).is_err());
        assert!(Profile::piecewise(vec![1.0, 0.0], vec![0.1, 0.2, 0.3]).is_err());
        assert!(Profile::piecewise(vec![0.0], vec![0.1]).is_err());
        assert!(Profile::constant(0.3).unwrap().with_reference(1.0).is_err());
    }

    #[test]
    fn step_is_right_continuous() {
        let p = Profile::step(0.8, 0.2).unwrap();
        assert_eq!(p.eval(-1e-12), 0.8);
        assert_eq!(p.eval(0.0), 0.2);
        assert!((p.cell_average(-0.5, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn integrals_match_quadrature() {
        let shapes = [
            Profile::ramp(0.9, 0.1, 1.5).unwrap(),
            Profile::piecewise(vec![-1.0, 0.5], vec![0.2, 0.7, 0.4]).unwrap(),
            Profile::step(0.3, 0.6).unwrap(),
        ];
        let intervals = [(-2.3, 1.7), (-2.3, -1.9), (0.9, 1.4), (-0.3, 0.2), (-1.2, 0.1)];
        for p in &shapes {
            for &(a, b) in &intervals {
                let m = 200_000;
                let h = (b - a) / m as f64;
                let mid: f64 = (0..m).map(|i| p.eval(a + (i as f64 + 0.5) * h)).sum::<f64>() * h;
                assert!((p.integral(a, b) - mid).abs() < 1e-5, "{p:?} on [{a}, {b}]");
            }
        }
    }

    #[test]
    fn discretization_matches_lattice_values() {
        let p = Profile::ramp(0.9, 0.1, 1.0).unwrap();
        let d = p.discretize(10, -20, 20).unwrap();
        for z in -20..=20 {
            assert_eq!(d.eval(z as f64 / 10.0), p.eval(z as f64 / 10.0));
        }
        assert_eq!(d.left_limit(), 0.9);
        assert_eq!(d.right_limit(), 0.1);
    }
}
