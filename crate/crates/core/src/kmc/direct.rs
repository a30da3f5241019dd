//! Direct-method reference: exact total rate, event selection by rate and a
//! plain Gillespie loop. Slow, used to cross-check the event loop.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Result, XwalkError};
use crate::kmc::event::{EventCounts, EventKind};
use crate::kmc::spec::{DynamicsSpec, Exclusion, WalkerSpec};
use crate::lattice::{Boundary, LatticeState, LocalFunction};

fn pattern_at(state: &LatticeState, center: i64, f: &LocalFunction) -> f64 {
    f.eval_with(|k| state.get(center + k))
}

/// Every clock with its rate, in a fixed order.
fn clocks(spec: &DynamicsSpec, state: &LatticeState) -> Vec<(EventKind, f64)> {
    let n = spec.n as f64;
    let mut out = Vec::new();
    let mult = spec.exchange_multiplier;
    for b in 0..state.bond_count() {
        let site = state.lo() + b as i64;
        let c = match &spec.exclusion {
            Exclusion::Simple => 1.0,
            Exclusion::SpeedChange { rate } => pattern_at(state, site, rate),
        };
        out.push((EventKind::Exchange { site }, n * n * mult * c));
    }
    let x = state.walker();
    match &spec.walker {
        WalkerSpec::NearestNeighbor(r) => {
            let xi0 = state.get(x);
            out.push((EventKind::Walk { step: 1 }, n * r.c_plus(xi0)));
            out.push((EventKind::Walk { step: -1 }, n * r.c_minus(xi0)));
        }
        WalkerSpec::General { jumps } => {
            for (z, f) in jumps {
                out.push((EventKind::Walk { step: *z }, n * pattern_at(state, x, f)));
            }
        }
    }
    for (z, f) in &spec.long_range {
        out.push((
            EventKind::MacroJump {
                z: *z,
                displacement: z * spec.n as i64,
            },
            pattern_at(state, x, f),
        ));
    }
    out
}

/// Λ(state): the sum of all clock rates, no-op exchanges included.
///
/// For simple exclusion with nearest-neighbour rates this is n²·B + n(α + β).
pub fn total_rate(spec: &DynamicsSpec, state: &LatticeState) -> f64 {
    clocks(spec, state).iter().map(|(_, r)| r).sum()
}

/// Selects an event with probability rate/Λ.
pub fn draw_event<R: Rng + ?Sized>(spec: &DynamicsSpec, state: &LatticeState, rng: &mut R) -> Result<EventKind> {
    let cs = clocks(spec, state);
    let total: f64 = cs.iter().map(|(_, r)| r).sum();
    if total <= 0.0 {
        return Err(XwalkError::AbsorbingState);
    }
    let mut u = rng.random::<f64>() * total;
    for (e, r) in &cs {
        if u < *r {
            return Ok(*e);
        }
        u -= r;
    }
    Ok(cs.iter().rev().find(|(_, r)| *r > 0.0).map(|(e, _)| *e).unwrap())
}

/// Gillespie loop up to time `t`; returns the per-category clock counts.
pub fn simulate_direct<R: Rng + ?Sized>(
    spec: &DynamicsSpec,
    state: &mut LatticeState,
    t: f64,
    rng: &mut R,
) -> Result<EventCounts> {
    let mut now = 0.0;
    let mut counts = EventCounts::default();
    loop {
        let total = total_rate(spec, state);
        if total <= 0.0 {
            return Err(XwalkError::AbsorbingState);
        }
        let wait: f64 = Exp1.sample(rng);
        now += wait / total;
        if now > t {
            return Ok(counts);
        }
        let e = draw_event(spec, state, rng)?;
        counts.proposals += 1;
        match e {
            EventKind::Exchange { .. } => counts.exchanges += 1,
            EventKind::Walk { step } if step > 0 => counts.walks_right += 1,
            EventKind::Walk { .. } => counts.walks_left += 1,
            EventKind::MacroJump { .. } => counts.macro_jumps += 1,
        }
        e.apply(state).map_err(|err| match err {
            XwalkError::WindowExhausted { .. } => XwalkError::WindowExhausted { time: now },
            other => other,
        })?;
        if state.boundary() == Boundary::FrozenProfile && state.index_of(state.walker()).is_none() {
            return Err(XwalkError::WindowExhausted { time: now });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::WalkerRates;

    #[test]
    fn base_model_total_rate() {
        let occ: Vec<u8> = (0..100).map(|i| (i % 3 == 0) as u8).collect();
        let s = LatticeState::periodic(-50, occ, 0).unwrap();
        let rates = WalkerRates::new(2.0, 1.0).unwrap();
        let spec = DynamicsSpec::nearest_neighbor(10, rates, 1.0);
        assert_eq!(total_rate(&spec, &s), 100.0 * 100.0 + 10.0 * 3.0);
        let spec = DynamicsSpec::nearest_neighbor(100, rates, 1.0);
        assert_eq!(total_rate(&spec, &s), 1_000_300.0);
    }

    #[test]
    fn empty_configuration_walk_rates() {
        let spec = DynamicsSpec::nearest_neighbor(7, WalkerRates::new(2.0, 1.0).unwrap(), 1.0);
        let s = LatticeState::periodic(-5, vec![0; 10], 0).unwrap();
        let cs = clocks(&spec, &s);
        let right = cs.iter().find(|(e, _)| *e == EventKind::Walk { step: 1 }).unwrap().1;
        let left = cs.iter().find(|(e, _)| *e == EventKind::Walk { step: -1 }).unwrap().1;
        assert_eq!(right, 7.0 * 1.0);
        assert_eq!(left, 7.0 * 2.0);
    }

    #[test]
    fn unit_speed_change_matches_simple() {
        let base = DynamicsSpec::nearest_neighbor(3, WalkerRates::new(0.5, 1.5).unwrap(), 1.0);
        let sc = base.clone().with_exclusion(Exclusion::SpeedChange {
            rate: LocalFunction::gradient_speed_change(0.0).unwrap(),
        });
        let occ: Vec<u8> = (0..12).map(|i| (i % 5 < 2) as u8).collect();
        let s = LatticeState::periodic(-6, occ, 0).unwrap();
        assert_eq!(clocks(&base, &s), clocks(&sc, &s));
    }
}
