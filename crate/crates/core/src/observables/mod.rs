//! Functionals of a run: the environment seen from the walker, the additive
//! functional and martingale residual, block statistics and empirical measures.

mod empirical;
mod record;

pub use empirical::{bin_edge, empirical_measure, EmpiricalMeasure, Frame};
pub use record::{replacement_statistic, BlockIntegral, MacroJumpRecord, TrajectoryRecord};

use crate::error::{invalid, Result, XwalkError};
use crate::kmc::WalkerSpec;
use crate::lattice::{Boundary, LatticeState};
use crate::stats::CompensatedSum;

/// ξ(z) = η(z + x) on the window re-centred at the walker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvView {
    /// Relative site of `values[0]`.
    pub lo: i64,
    pub values: Vec<u8>,
}

impl EnvView {
    pub fn get(&self, z: i64) -> Option<u8> {
        let k = z - self.lo;
        (0..self.values.len() as i64)
            .contains(&k)
            .then(|| self.values[k as usize])
    }
}

/// The environment seen from the walker. On a ring the view covers
/// [−⌊L/2⌋, L − ⌊L/2⌋ − 1].
pub fn env_view(state: &LatticeState) -> EnvView {
    let len = state.len() as i64;
    let lo = match state.boundary() {
        Boundary::Periodic => -(len / 2),
        Boundary::FrozenProfile => state.lo() - state.walker(),
    };
    let x = state.walker();
    EnvView {
        lo,
        values: (lo..lo + len).map(|z| state.get(z + x)).collect(),
    }
}

/// Exact integral of 1 − 2ξ(0) over piecewise-constant stretches.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdditiveFunctional {
    sum: CompensatedSum<f64>,
}

impl AdditiveFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, xi0: u8, dt: f64) -> Result<()> {
        if !(dt >= 0.0) {
            return Err(invalid("dt", format!("{dt} must be non-negative")));
        }
        self.sum.add(if xi0 == 0 { dt } else { -dt });
        Ok(())
    }

    pub fn value(&self) -> f64 {
        self.sum.value()
    }
}

/// M̃ = x/n − (β − α)·A for the nearest-neighbour walker.
pub fn martingale_residual(x_over_n: f64, additive: f64, walker: &WalkerSpec) -> Result<f64> {
    match walker {
        WalkerSpec::NearestNeighbor(r) => Ok(x_over_n - (r.beta - r.alpha) * additive),
        WalkerSpec::General { .. } => Err(XwalkError::Unsupported(
            "the residual decomposition needs nearest-neighbour rates".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::WalkerRates;

    #[test]
    fn view_identity_and_shift() {
        let mut occ = vec![0u8; 11];
        occ[5] = 1;
        let mut s = LatticeState::periodic(0, occ, 0).unwrap();
        let v0 = env_view(&s);
        assert_eq!(v0.get(5), Some(1));
        assert_eq!(v0.get(0), Some(0));
        s.set_walker(5);
        assert_eq!(env_view(&s).get(0), Some(1));
        let before = env_view(&s);
        s.set_walker(6);
        let after = env_view(&s);
        for z in -4..4 {
            assert_eq!(after.get(z), before.get(z + 1));
        }
    }

    #[test]
    fn additive_functional_cases() {
        let mut a = AdditiveFunctional::new();
        a.update(0, 0.7).unwrap();
        assert_eq!(a.value(), 0.7);
        let mut b = AdditiveFunctional::new();
        b.update(1, 0.7).unwrap();
        assert_eq!(b.value(), -0.7);
        let mut c = AdditiveFunctional::new();
        for k in 0..10 {
            c.update((k % 2) as u8, 0.05).unwrap();
        }
        assert!(c.value().abs() < 1e-15);
        assert!(c.update(0, -1.0).is_err());
    }

    #[test]
    fn residual_needs_nearest_neighbour() {
        let w = WalkerSpec::NearestNeighbor(WalkerRates::new(1.0, 1.0).unwrap());
        assert_eq!(martingale_residual(0.3, 5.0, &w).unwrap(), 0.3);
        let g = WalkerSpec::General { jumps: vec![] };
        assert!(matches!(
            martingale_residual(0.3, 5.0, &g),
            Err(XwalkError::Unsupported(_))
        ));
    }
}
