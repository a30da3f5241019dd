use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, XwalkError};
use crate::lattice::{Boundary, LocalFunction, WalkerRates};

/// Exchange mechanism of the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Exclusion {
    Simple,
    /// Bond (z, z+1) exchanges at rate n²·c₀(θ^z η).
    SpeedChange {
        rate: LocalFunction,
    },
}

/// Walker jump mechanism. Rates are multiplied by n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WalkerSpec {
    NearestNeighbor(WalkerRates),
    /// Jump by z at rate n·γ_z(ξ).
    General {
        jumps: Vec<(i64, LocalFunction)>,
    },
}

impl WalkerSpec {
    /// The jump table {z: γ_z}; for nearest-neighbour rates the two-entry table.
    pub fn jump_table(&self) -> Vec<(i64, LocalFunction)> {
        match self {
            WalkerSpec::NearestNeighbor(r) => r.as_jump_table(),
            WalkerSpec::General { jumps } => jumps.clone(),
        }
    }

    pub fn radius(&self) -> u32 {
        match self {
            WalkerSpec::NearestNeighbor(_) => 0,
            WalkerSpec::General { jumps } => jumps.iter().map(|(_, f)| f.radius()).max().unwrap_or(0),
        }
    }

    /// Σ_z sup γ_z (without the factor n).
    pub fn sup_total(&self) -> f64 {
        match self {
            WalkerSpec::NearestNeighbor(r) => r.total(),
            WalkerSpec::General { jumps } => jumps.iter().map(|(_, f)| f.sup()).sum(),
        }
    }

    /// Σ_z (sup γ_z − inf γ_z), the constant of the random-walk term in the
    /// Dirichlet estimate; equals 2|α − β| for nearest-neighbour rates.
    pub fn oscillation(&self) -> f64 {
        match self {
            WalkerSpec::NearestNeighbor(r) => 2.0 * (r.alpha - r.beta).abs(),
            WalkerSpec::General { jumps } => jumps.iter().map(|(_, f)| f.sup() - f.min()).sum(),
        }
    }

    pub fn max_step(&self) -> i64 {
        match self {
            WalkerSpec::NearestNeighbor(_) => 1,
            WalkerSpec::General { jumps } => jumps.iter().map(|(z, _)| z.abs()).max().unwrap_or(0),
        }
    }
}

/// Everything needed to run the rescaled dynamics on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    pub n: u32,
    pub exclusion: Exclusion,
    /// Multiplies every exchange rate; 0 freezes the environment.
    #[serde(default = "one")]
    pub exchange_multiplier: f64,
    pub walker: WalkerSpec,
    /// Macroscopic jumps: the walker moves by n·z at rate γ̃_z(ξ).
    #[serde(default)]
    pub long_range: Vec<(i64, LocalFunction)>,
    /// Horizon in macroscopic time.
    pub horizon: f64,
}

fn one() -> f64 {
    1.0
}

impl DynamicsSpec {
    pub fn nearest_neighbor(n: u32, rates: WalkerRates, horizon: f64) -> Self {
        Self {
            n,
            exclusion: Exclusion::Simple,
            exchange_multiplier: 1.0,
            walker: WalkerSpec::NearestNeighbor(rates),
            long_range: Vec::new(),
            horizon,
        }
    }

    pub fn with_exclusion(mut self, exclusion: Exclusion) -> Self {
        self.exclusion = exclusion;
        self
    }

    pub fn with_long_range(mut self, jumps: Vec<(i64, LocalFunction)>) -> Self {
        self.long_range = jumps;
        self
    }

    pub fn with_exchange_multiplier(mut self, m: f64) -> Self {
        self.exchange_multiplier = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n", "scale must be at least 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(invalid("horizon", format!("{} must be positive", self.horizon)));
        }
        if !(self.exchange_multiplier >= 0.0 && self.exchange_multiplier.is_finite()) {
            return Err(invalid(
                "exchange_multiplier",
                format!("{} must be finite and non-negative", self.exchange_multiplier),
            ));
        }
        if let Exclusion::SpeedChange { rate } = &self.exclusion {
            if rate.min() <= 0.0 {
                return Err(XwalkError::InvalidLocalFunction(
                    "speed-change rate must be strictly positive".into(),
                ));
            }
            if rate.depends_on(0) || rate.depends_on(1) {
                return Err(XwalkError::InvalidLocalFunction(
                    "speed-change rate must not depend on the exchanged sites 0 and 1".into(),
                ));
            }
        }
        match &self.walker {
            WalkerSpec::NearestNeighbor(r) => r.validate()?,
            WalkerSpec::General { jumps } => {
                if jumps.iter().any(|(z, _)| *z == 0) {
                    return Err(invalid("walker", "jump size 0 is not allowed"));
                }
                if has_duplicates(jumps) {
                    return Err(invalid("walker", "duplicate jump sizes"));
                }
            }
        }
        if self.long_range.iter().any(|(z, _)| *z == 0) {
            return Err(invalid("long_range", "jump size 0 is not allowed"));
        }
        if has_duplicates(&self.long_range) {
            return Err(invalid("long_range", "duplicate jump sizes"));
        }
        Ok(())
    }

    /// ε₀ with ε₀ ≤ c₀ ≤ 1/ε₀; 1 for simple exclusion.
    pub fn epsilon0(&self) -> f64 {
        match &self.exclusion {
            Exclusion::Simple => 1.0,
            Exclusion::SpeedChange { rate } => rate.min().min(1.0 / rate.sup()),
        }
    }

    /// Largest per-bond exchange rate factor (before n²).
    pub fn exchange_sup(&self) -> f64 {
        let c = match &self.exclusion {
            Exclusion::Simple => 1.0,
            Exclusion::SpeedChange { rate } => rate.sup(),
        };
        c * self.exchange_multiplier
    }

    /// Largest radius among all local functions of the spec.
    pub fn radius(&self) -> u32 {
        let ex = match &self.exclusion {
            Exclusion::Simple => 0,
            Exclusion::SpeedChange { rate } => rate.radius(),
        };
        let lr = self.long_range.iter().map(|(_, f)| f.radius()).max().unwrap_or(0);
        ex.max(self.walker.radius()).max(lr)
    }

    /// Σ_z sup γ̃_z.
    pub fn long_range_sup_total(&self) -> f64 {
        self.long_range.iter().map(|(_, f)| f.sup()).sum()
    }

    /// Checks that a window of `len` sites can host the run: twice the largest
    /// local radius plus two, and for macroscopic jumps under a frozen boundary
    /// a half-width of at least n·max|z|·(1 + k) where k bounds the jump count
    /// (mean + 4 sd + 1). A ring wraps jumps around and needs no such margin.
    pub fn validate_window(&self, len: usize, boundary: Boundary) -> Result<()> {
        let r = self.radius() as usize;
        if len < 2 * r + 2 || len < 4 {
            return Err(XwalkError::InvalidWindow(format!(
                "{len} sites cannot host local functions of radius {r}"
            )));
        }
        if boundary == Boundary::FrozenProfile && !self.long_range.is_empty() {
            let zmax = self.long_range.iter().map(|(z, _)| z.unsigned_abs()).max().unwrap_or(0);
            let mean = self.long_range_sup_total() * self.horizon;
            let jumps = (mean + 4.0 * mean.sqrt() + 1.0).ceil();
            let need = self.n as f64 * zmax as f64 * (1.0 + jumps);
            if ((len / 2) as f64) < need {
                return Err(XwalkError::InvalidWindow(format!(
                    "half-width {} is below {need} sites needed for macroscopic jumps",
                    len / 2
                )));
            }
        }
        Ok(())
    }
}

fn has_duplicates(jumps: &[(i64, LocalFunction)]) -> bool {
    let mut zs: Vec<i64> = jumps.iter().map(|(z, _)| *z).collect();
    zs.sort_unstable();
    zs.windows(2).any(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> DynamicsSpec {
        DynamicsSpec::nearest_neighbor(10, WalkerRates::new(2.0, 1.0).unwrap(), 1.0)
    }

    #[test]
    fn speed_change_constraints() {
        let bad = LocalFunction::occupation(1)
            .unwrap()
            .combine(1.0, &LocalFunction::constant(1.0).unwrap(), 1.0)
            .unwrap();
        let s = base().with_exclusion(Exclusion::SpeedChange { rate: bad });
        assert!(s.validate().is_err());
        let zero = LocalFunction::occupation(-1).unwrap();
        assert!(base()
            .with_exclusion(Exclusion::SpeedChange { rate: zero })
            .validate()
            .is_err());
        let good = LocalFunction::gradient_speed_change(1.0).unwrap();
        let s = base().with_exclusion(Exclusion::SpeedChange { rate: good });
        s.validate().unwrap();
        assert!((s.epsilon0() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.exchange_sup(), 3.0);
    }

    #[test]
    fn walker_oscillation() {
        assert_eq!(base().walker.oscillation(), 2.0);
        let g = WalkerSpec::General {
            jumps: WalkerRates::new(2.0, 1.0).unwrap().as_jump_table(),
        };
        assert_eq!(g.oscillation(), 2.0);
    }

    #[test]
    fn long_range_window_sizing() {
        let s = base().with_long_range(vec![(1, LocalFunction::constant(1.0).unwrap())]);
        assert!(s.validate_window(41, Boundary::FrozenProfile).is_err());
        assert!(s.validate_window(401, Boundary::FrozenProfile).is_ok());
        assert!(s.validate_window(41, Boundary::Periodic).is_ok());
        let z0 = base().with_long_range(vec![(0, LocalFunction::constant(1.0).unwrap())]);
        assert!(z0.validate().is_err());
    }
}
