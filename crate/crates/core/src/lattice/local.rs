use serde::{Deserialize, Serialize};

use crate::error::{Result, XwalkError};
use crate::scalar::Scalar;

/// Largest supported radius; tables have 2^(2R+1) entries.
pub const MAX_RADIUS: u32 = 6;

/// Non-negative function of the occupations η(−R), …, η(R).
///
/// Patterns are encoded as integers: bit `k` holds η(k − R).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LocalFunctionRepr", into = "LocalFunctionRepr")]
pub struct LocalFunction {
    radius: u32,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LocalFunctionRepr {
    radius: u32,
    table: Vec<f64>,
}

impl TryFrom<LocalFunctionRepr> for LocalFunction {
    type Error = XwalkError;
    fn try_from(r: LocalFunctionRepr) -> Result<Self> {
        Self::from_table(r.radius, r.table)
    }
}

impl From<LocalFunction> for LocalFunctionRepr {
    fn from(f: LocalFunction) -> Self {
        Self {
            radius: f.radius,
            table: f.table,
        }
    }
}

impl LocalFunction {
    pub fn from_table(radius: u32, table: Vec<f64>) -> Result<Self> {
        if radius > MAX_RADIUS {
            return Err(XwalkError::InvalidLocalFunction(format!(
                "radius {radius} exceeds {MAX_RADIUS}"
            )));
        }
        let size = 1usize << (2 * radius + 1);
        if table.len() != size {
            return Err(XwalkError::InvalidLocalFunction(format!(
                "radius {radius} needs {size} table entries, got {}",
                table.len()
            )));
        }
        if let Some(v) = table.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(XwalkError::InvalidLocalFunction(format!(
                "table entry {v} is not a finite non-negative number"
            )));
        }
        Ok(Self { radius, table })
    }

    /// Tabulates `f` over all patterns; `f` receives a site accessor `η(k)`, |k| ≤ R.
    pub fn from_fn(radius: u32, f: impl Fn(&dyn Fn(i32) -> u8) -> f64) -> Result<Self> {
        if radius > MAX_RADIUS {
            return Err(XwalkError::InvalidLocalFunction(format!(
                "radius {radius} exceeds {MAX_RADIUS}"
            )));
        }
        let r = radius as i32;
        let table = (0..1usize << (2 * radius + 1))
            .map(|p| {
                let eta = |k: i32| -> u8 {
                    assert!(k.abs() <= r, "site {k} outside radius {r}");
                    ((p >> (k + r)) & 1) as u8
                };
                f(&eta)
            })
            .collect();
        Self::from_table(radius, table)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::from_table(0, vec![c, c])
    }

    /// η(site).
    pub fn occupation(site: i32) -> Result<Self> {
        Self::from_fn(site.unsigned_abs(), |eta| eta(site) as f64)
    }

    /// `empty + (occupied − empty)·η(0)`.
    pub fn on_origin(empty: f64, occupied: f64) -> Result<Self> {
        Self::from_table(0, vec![empty, occupied])
    }

    /// Bond rate 1 + a(η(−1) + η(2)) for the bond (0, 1).
    pub fn gradient_speed_change(a: f64) -> Result<Self> {
        if a <= -0.5 {
            return Err(XwalkError::InvalidLocalFunction(format!(
                "speed-change parameter a = {a} must exceed -1/2"
            )));
        }
        Self::from_fn(2, |eta| 1.0 + a * (eta(-1) + eta(2)) as f64)
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    #[inline]
    pub fn table(&self) -> &[f64] {
        &self.table
    }

    #[inline]
    pub fn pattern_count(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn eval(&self, pattern: usize) -> f64 {
        self.table[pattern]
    }

    /// Evaluates on a configuration given by an accessor over relative sites.
    pub fn eval_with(&self, eta: impl Fn(i64) -> u8) -> f64 {
        let r = self.radius as i64;
        let mut p = 0usize;
        for k in -r..=r {
            p |= ((eta(k) & 1) as usize) << (k + r);
        }
        self.table[p]
    }

    /// Re-expresses the function on a larger radius.
    pub fn widen(&self, radius: u32) -> Result<Self> {
        if radius < self.radius {
            return Err(XwalkError::InvalidLocalFunction(format!(
                "cannot narrow radius {} to {radius}",
                self.radius
            )));
        }
        let shift = radius - self.radius;
        let mask = (1usize << (2 * self.radius + 1)) - 1;
        Self::from_table(
            radius,
            (0..1usize << (2 * radius + 1))
                .map(|p| self.table[(p >> shift) & mask])
                .collect(),
        )
    }

    pub fn sup(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.table.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_constant(&self) -> bool {
        self.table.iter().all(|&v| v == self.table[0])
    }

    /// Whether the value changes when η(site) is flipped for some pattern.
    pub fn depends_on(&self, site: i32) -> bool {
        let r = self.radius as i32;
        if site.abs() > r {
            return false;
        }
        let bit = 1usize << (site + r);
        (0..self.table.len()).any(|p| self.table[p] != self.table[p ^ bit])
    }

    /// ν_ρ(f): exact sum over patterns weighted by the Bernoulli product measure.
    pub fn product_expectation<T: Scalar>(&self, rho: T) -> T {
        let one = T::one();
        let sites = 2 * self.radius + 1;
        let mut sum = T::zero();
        for (p, &v) in self.table.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let ones = (p as u32).count_ones();
            let w = rho.powi(ones as i32) * (one - rho).powi((sites - ones) as i32);
            sum = sum + T::of(v) * w;
        }
        sum
    }

    /// Pointwise linear combination `a·self + b·other` (clamped at 0 is not applied;
    /// the result must be non-negative).
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        let r = self.radius.max(other.radius);
        let x = self.widen(r)?;
        let y = other.widen(r)?;
        Self::from_table(r, x.table.iter().zip(&y.table).map(|(u, v)| a * u + b * v).collect())
    }
}

/// Nearest-neighbour walker rates. On an empty site the walker jumps right at
/// rate β and left at rate α; on an occupied site the roles are exchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerRates {
    pub alpha: f64,
    pub beta: f64,
}

impl WalkerRates {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let r = Self { alpha, beta };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(XwalkError::InvalidRates(format!(
                "alpha = {}, beta = {} must be finite and non-negative",
                self.alpha, self.beta
            )));
        }
        if self.alpha + self.beta <= 0.0 {
            return Err(XwalkError::InvalidRates("alpha + beta must be positive".into()));
        }
        Ok(())
    }

    /// c₊₁ as a function of the occupation at the walker.
    #[inline]
    pub fn c_plus(&self, occupied: u8) -> f64 {
        if occupied != 0 {
            self.alpha
        } else {
            self.beta
        }
    }

    /// c₋₁ as a function of the occupation at the walker.
    #[inline]
    pub fn c_minus(&self, occupied: u8) -> f64 {
        if occupied != 0 {
            self.beta
        } else {
            self.alpha
        }
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Macroscopic drift (β − α)(1 − 2ρ).
    pub fn drift<T: Scalar>(&self, rho: T) -> T {
        T::of(self.beta - self.alpha) * (T::one() - T::of(2.0) * rho)
    }

    /// The same rates as a general jump table {+1: c₊₁, −1: c₋₁}.
    pub fn as_jump_table(&self) -> Vec<(i64, LocalFunction)> {
        vec![
            (
                1,
                LocalFunction::on_origin(self.beta, self.alpha).expect("validated rates"),
            ),
            (
                -1,
                LocalFunction::on_origin(self.alpha, self.beta).expect("validated rates"),
            ),
        ]
    }
}
