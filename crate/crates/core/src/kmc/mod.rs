//! Continuous-time simulation of the environment and the walker.

mod direct;
mod engine;
mod event;
mod plan;
mod spec;

pub use direct::{draw_event, simulate_direct, total_rate};
pub use engine::simulate;
pub use event::{EventCounts, EventKind, EventLog, LoggedEvent};
pub use plan::{MacroClock, ObservationPlan, Observer, RunningTotals};
pub use spec::{DynamicsSpec, Exclusion, WalkerSpec};
