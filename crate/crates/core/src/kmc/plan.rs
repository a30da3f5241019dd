use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::LatticeState;
use crate::observables::Frame;

/// How macroscopic jumps are clocked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MacroClock {
    /// Proposals at rate Σ_z sup γ̃_z, accepted with probability γ̃_z(ξ)/sup γ̃_z.
    #[default]
    Uniformized,
    /// The jump of index z fires when ∫₀^t γ̃_z(ξ_s)/sup γ̃_z ds reaches
    /// `thresholds[k]` (k-th entry of the long-range table). Thresholds are
    /// first arrival times of Poisson clocks of rate sup γ̃_z, so the marginal
    /// law is unchanged while a second process can share the same clocks.
    /// Runs end at the first jump.
    TimeChange { thresholds: Vec<f64> },
}

/// What to record during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPlan {
    /// Times at which x/n, A, M̃ and block integrals are recorded.
    pub sample_times: Vec<f64>,
    /// Times at which empirical measures are taken.
    pub snapshot_times: Vec<f64>,
    pub frames: Vec<Frame>,
    pub bin_width: f64,
    /// Block sizes ⌊εn⌋ for the replacement statistic.
    pub epsilons: Vec<f64>,
    pub record_events: bool,
    pub stop_at_first_macro_jump: bool,
    pub macro_clock: MacroClock,
}

impl ObservationPlan {
    /// Samples and snapshots at 0, T/4, T/2, 3T/4, T; bins of width 0.1 in both frames.
    pub fn standard(horizon: f64) -> Self {
        let grid: Vec<f64> = (0..=4).map(|k| horizon * k as f64 / 4.0).collect();
        Self {
            sample_times: grid.clone(),
            snapshot_times: grid,
            frames: vec![Frame::Lab, Frame::Walker],
            bin_width: 0.1,
            epsilons: Vec::new(),
            record_events: false,
            stop_at_first_macro_jump: false,
            macro_clock: MacroClock::Uniformized,
        }
    }

    /// Only the final time, no snapshots.
    pub fn endpoint(horizon: f64) -> Self {
        Self {
            sample_times: vec![horizon],
            snapshot_times: Vec::new(),
            ..Self::standard(horizon)
        }
    }

    pub fn with_epsilons(mut self, eps: Vec<f64>) -> Self {
        self.epsilons = eps;
        self
    }

    pub fn with_events(mut self) -> Self {
        self.record_events = true;
        self
    }

    pub fn with_sample_times(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn with_snapshots(mut self, times: Vec<f64>, frames: Vec<Frame>) -> Self {
        self.snapshot_times = times;
        self.frames = frames;
        self
    }

    pub fn with_bin_width(mut self, h: f64) -> Self {
        self.bin_width = h;
        self
    }

    pub fn with_macro_clock(mut self, clock: MacroClock, stop_at_first: bool) -> Self {
        self.macro_clock = clock;
        self.stop_at_first_macro_jump = stop_at_first;
        self
    }

    pub(crate) fn validate(&self, horizon: f64, long_range: usize) -> Result<()> {
        for &t in self.sample_times.iter().chain(&self.snapshot_times) {
            if !(0.0..=horizon).contains(&t) {
                return Err(invalid("sample_times", format!("{t} outside [0, {horizon}]")));
            }
        }
        if !self.snapshot_times.is_empty() && !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(invalid("bin_width", format!("{} must be positive", self.bin_width)));
        }
        if let MacroClock::TimeChange { thresholds } = &self.macro_clock {
            if thresholds.len() != long_range {
                return Err(invalid(
                    "macro_clock",
                    format!("{} thresholds for {long_range} jump sizes", thresholds.len()),
                ));
            }
            if thresholds.iter().any(|s| !(*s > 0.0)) {
                return Err(invalid("macro_clock", "thresholds must be positive"));
            }
            if !self.stop_at_first_macro_jump {
                return Err(invalid(
                    "macro_clock",
                    "time-changed clocks only support runs that stop at the first jump",
                ));
            }
        }
        Ok(())
    }
}

/// Running totals handed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningTotals {
    pub time: f64,
    pub additive: f64,
    pub occupation_integral: f64,
}

/// Callback invoked with the exact state at its declared times.
pub trait Observer {
    fn times(&self) -> Vec<f64>;
    fn observe(&mut self, state: &LatticeState, totals: &RunningTotals);
}
