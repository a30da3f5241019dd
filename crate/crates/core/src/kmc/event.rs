use serde::{Deserialize, Serialize};

use crate::error::{Result, XwalkError};
use crate::lattice::LatticeState;
use crate::stats::CompensatedSum;

/// A state-changing transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    /// Swap of η(site) and η(site + 1).
    Exchange { site: i64 },
    /// Walker step by `step` sites at a rate proportional to n.
    Walk { step: i64 },
    /// Macroscopic jump of index z, moving the walker by n·z sites.
    MacroJump { z: i64, displacement: i64 },
}

impl EventKind {
    /// Applies the transition to a state.
    pub fn apply(&self, state: &mut LatticeState) -> Result<()> {
        match *self {
            EventKind::Exchange { site } => {
                let i = state
                    .index_of(site)
                    .ok_or_else(|| XwalkError::InvalidWindow(format!("bond at {site} outside window")))?;
                let j = state
                    .index_of(site + 1)
                    .ok_or_else(|| XwalkError::InvalidWindow(format!("bond at {site} leaves the window")))?;
                state.occupancy_mut().swap(i, j);
            }
            EventKind::Walk { step: d } | EventKind::MacroJump { displacement: d, .. } => {
                let x = state.walker() + d;
                if state.index_of(x).is_none() {
                    return Err(XwalkError::WindowExhausted { time: f64::NAN });
                }
                state.set_walker(x);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub time: f64,
    pub kind: EventKind,
}

/// Every state-changing event of a run, replayable from the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub initial: LatticeState,
    pub events: Vec<LoggedEvent>,
}

impl EventLog {
    pub fn new(initial: LatticeState) -> Self {
        Self {
            initial,
            events: Vec::new(),
        }
    }

    pub fn times_increasing(&self) -> bool {
        self.events.windows(2).all(|w| w[0].time < w[1].time)
    }

    /// State after every logged event.
    pub fn replay(&self) -> Result<LatticeState> {
        let mut s = self.initial.clone();
        for e in &self.events {
            e.kind.apply(&mut s)?;
        }
        Ok(s)
    }

    /// ∫₀^t (1 − 2ξ_s(0)) ds recomputed from the log.
    pub fn additive_functional(&self, t: f64) -> Result<f64> {
        let mut s = self.initial.clone();
        let mut acc = CompensatedSum::<f64>::new();
        let mut last = 0.0;
        for e in self.events.iter().take_while(|e| e.time <= t) {
            let xi0 = s.get(s.walker()) as f64;
            acc.add((1.0 - 2.0 * xi0) * (e.time - last));
            last = e.time;
            e.kind.apply(&mut s)?;
        }
        let xi0 = s.get(s.walker()) as f64;
        acc.add((1.0 - 2.0 * xi0) * (t - last));
        Ok(acc.value())
    }
}

/// Clock rings per category; no-op exchanges of equal occupations count as rings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub proposals: u64,
    pub exchanges: u64,
    pub walks_right: u64,
    pub walks_left: u64,
    pub macro_jumps: u64,
}

impl EventCounts {
    pub fn walks(&self) -> u64 {
        self.walks_right + self.walks_left
    }

    pub fn merge(&mut self, other: &Self) {
        self.proposals += other.proposals;
        self.exchanges += other.exchanges;
        self.walks_right += other.walks_right;
        self.walks_left += other.walks_left;
        self.macro_jumps += other.macro_jumps;
    }
}
