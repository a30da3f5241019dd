use serde::{Deserialize, Serialize};

use crate::error::{Result, XwalkError};
use crate::kmc::{EventCounts, EventLog};
use crate::lattice::LatticeState;
use crate::observables::EmpiricalMeasure;

/// Running integral of the block sum Σ_{z=1}^{m} ξ(z), m = ⌊εn⌋.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockIntegral {
    pub epsilon: f64,
    pub block: usize,
    /// ∫₀^{t_k} Σ_{z=1}^{m} ξ_s(z) ds at each sample time.
    pub integrals: Vec<f64>,
}

/// First macroscopic jump of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroJumpRecord {
    pub time: f64,
    pub z: i64,
}

/// Observations of one run at its sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n: u32,
    pub times: Vec<f64>,
    pub x_over_n: Vec<f64>,
    /// A_t = ∫₀^t (1 − 2ξ_s(0)) ds.
    pub additive: Vec<f64>,
    /// x/n − (β − α)A for nearest-neighbour walkers.
    pub mtilde: Option<Vec<f64>>,
    /// ∫₀^t ξ_s(0) ds.
    pub occupation_integral: Vec<f64>,
    pub blocks: Vec<BlockIntegral>,
    pub snapshots: Vec<EmpiricalMeasure>,
    pub counts: EventCounts,
    pub first_macro_jump: Option<MacroJumpRecord>,
    /// Time at which the run ended early, if it did.
    pub stopped_at: Option<f64>,
    pub final_state: LatticeState,
    pub event_log: Option<EventLog>,
}

impl TrajectoryRecord {
    pub fn sample_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| XwalkError::InvalidParameter {
                name: "t",
                reason: format!("{t} is not a sample time"),
            })
    }

    pub fn final_x_over_n(&self) -> f64 {
        self.x_over_n.last().copied().unwrap_or(0.0)
    }

    /// |∫₀^t (ξ_s(0) − (1/m)Σ_{z=1}^{m} ξ_s(z)) ds| at a sample time.
    pub fn replacement(&self, epsilon: f64, t: f64) -> Result<f64> {
        let k = self.sample_index(t)?;
        let b = self
            .blocks
            .iter()
            .find(|b| b.epsilon == epsilon)
            .ok_or_else(|| XwalkError::InvalidEpsilon(format!("{epsilon} was not observed")))?;
        Ok((self.occupation_integral[k] - b.integrals[k] / b.block as f64).abs())
    }

    /// sup_k |M̃_{t_k}| over the sample times.
    pub fn sup_abs_mtilde(&self) -> Option<f64> {
        self.mtilde
            .as_ref()
            .map(|m| m.iter().fold(0.0f64, |a, v| a.max(v.abs())))
    }
}

/// Replacement statistic of a recorded run; see [`TrajectoryRecord::replacement`].
pub fn replacement_statistic(record: &TrajectoryRecord, epsilon: f64, t: f64) -> Result<f64> {
    record.replacement(epsilon, t)
}
