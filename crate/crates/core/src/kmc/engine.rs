//! Event loop for the rescaled generator.
//!
//! All clocks are uniformized against a constant proposal rate
//!
//! ```text
//! Λ = n²·m·c_max·B + n·Σ_z sup γ_z + Σ_z sup γ̃_z
//! ```
//!
//! (m the exchange multiplier, B the bond count; the last term only with
//! uniformized macroscopic jumps) and a proposal is accepted with probability
//! rate/bound. For simple exclusion and nearest-neighbour walkers every
//! proposal is accepted, and exchanges of equal occupations are identities.
//!
//! On an observation interval of length Δ the number of proposals is drawn as
//! N ~ Poisson(ΛΔ); their times are the order statistics of N uniforms. Times
//! are only materialised for events that change a tracked quantity (the
//! occupation at the walker, block sums, time-change integrands): given the
//! previous timed proposal p at unit position a, the position of proposal i
//! is a + (1 − a)·Beta(i − p, N − i + 1).

use rand::{Rng, RngCore};
use rand_distr::{Beta, Distribution, Poisson};

use crate::error::{Result, XwalkError};
use crate::kmc::event::{EventCounts, EventKind, EventLog, LoggedEvent};
use crate::kmc::plan::{MacroClock, ObservationPlan, Observer, RunningTotals};
use crate::kmc::spec::{DynamicsSpec, Exclusion, WalkerSpec};
use crate::lattice::{Boundary, LatticeState, LocalFunction, HALO};
use crate::observables::{empirical_measure, BlockIntegral, MacroJumpRecord, TrajectoryRecord};
use crate::rng::uniform53;
use crate::stats::CompensatedSum;

struct Block {
    m: usize,
    sum: i64,
    integral: CompensatedSum<f64>,
}

struct TimeChangeClock {
    z: i64,
    f: LocalFunction,
    inv_sup: f64,
    threshold: f64,
    rate: f64,
    integral: f64,
}

enum WalkerMode {
    Nearest {
        beta_n: f64,
        alpha_n: f64,
    },
    General {
        cum: Vec<f64>,
        jumps: Vec<(i64, LocalFunction, f64)>,
    },
}

struct Engine<'a> {
    spec: &'a DynamicsSpec,
    state: LatticeState,
    len: usize,
    periodic: bool,
    w: usize,
    ex_bonds: usize,
    bond_scale: f64,
    other_total: f64,
    walker_total: f64,
    lambda: f64,
    speed_change: Option<(&'a LocalFunction, f64)>,
    walker: WalkerMode,
    macro_cum: Vec<f64>,
    macro_jumps: Vec<(i64, &'a LocalFunction, f64)>,
    clocks: Vec<TimeChangeClock>,
    tracked: Vec<bool>,
    margin: usize,
    xi0: u8,
    additive: CompensatedSum<f64>,
    occupation: CompensatedSum<f64>,
    blocks: Vec<Block>,
    last_t: f64,
    counts: EventCounts,
    log: Option<EventLog>,
    first_macro: Option<MacroJumpRecord>,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a DynamicsSpec, state: LatticeState, plan: &ObservationPlan) -> Result<Self> {
        let len = state.len();
        let periodic = state.boundary() == Boundary::Periodic;
        let n = spec.n as f64;
        let w = state
            .index_of(state.walker())
            .ok_or(XwalkError::WindowExhausted { time: 0.0 })?;
        let bonds = state.bond_count();
        let unit = n * n * spec.exchange_sup();
        let ex_bonds = if unit > 0.0 { bonds } else { 0 };
        let speed_change = match &spec.exclusion {
            Exclusion::Simple => None,
            Exclusion::SpeedChange { rate } => Some((rate, 1.0 / rate.sup())),
        };
        let walker = match &spec.walker {
            WalkerSpec::NearestNeighbor(r) => WalkerMode::Nearest {
                beta_n: n * r.beta,
                alpha_n: n * r.alpha,
            },
            WalkerSpec::General { jumps } => {
                let mut cum = Vec::new();
                let mut acc = 0.0;
                let mut js = Vec::new();
                for (z, f) in jumps {
                    let s = f.sup();
                    if s > 0.0 {
                        acc += n * s;
                        cum.push(acc);
                        js.push((*z, f.clone(), 1.0 / s));
                    }
                }
                WalkerMode::General { cum, jumps: js }
            }
        };
        let walker_total = n * spec.walker.sup_total();
        let (macro_cum, macro_jumps, clocks) = match &plan.macro_clock {
            MacroClock::Uniformized => {
                let mut cum = Vec::new();
                let mut js = Vec::new();
                let mut acc = 0.0;
                for (z, f) in &spec.long_range {
                    let s = f.sup();
                    if s > 0.0 {
                        acc += s;
                        cum.push(acc);
                        js.push((*z, f, 1.0 / s));
                    }
                }
                (cum, js, Vec::new())
            }
            MacroClock::TimeChange { thresholds } => {
                let clocks = spec
                    .long_range
                    .iter()
                    .zip(thresholds)
                    .map(|((z, f), &s)| TimeChangeClock {
                        z: *z,
                        f: f.clone(),
                        inv_sup: if f.sup() > 0.0 { 1.0 / f.sup() } else { 0.0 },
                        threshold: s,
                        rate: 0.0,
                        integral: 0.0,
                    })
                    .collect();
                (Vec::new(), Vec::new(), clocks)
            }
        };
        let macro_total = macro_cum.last().copied().unwrap_or(0.0);
        let other_total = walker_total + macro_total;
        let lambda = ex_bonds as f64 * unit + other_total;
        if lambda <= 0.0 {
            return Err(XwalkError::AbsorbingState);
        }
        let bond_scale = if unit > 0.0 { lambda / unit } else { 0.0 };

        let mut blocks = Vec::new();
        for &eps in &plan.epsilons {
            let m = (eps * n).floor();
            if !(m >= 1.0) {
                return Err(XwalkError::InvalidEpsilon(format!(
                    "epsilon {eps} gives an empty block at n = {}",
                    spec.n
                )));
            }
            let m = m as usize;
            if 2 * m >= len {
                return Err(XwalkError::InvalidEpsilon(format!(
                    "block of {m} sites exceeds half the window of {len} sites"
                )));
            }
            blocks.push(Block {
                m,
                sum: 0,
                integral: CompensatedSum::new(),
            });
        }

        // offsets d of bonds (w + d, w + d + 1), stored twice so that a bond at
        // index a is looked up at a + len − w without wrapping
        let mut offsets = vec![0, len - 1];
        offsets.extend(blocks.iter().map(|b| b.m));
        if let Some(r) = clocks.iter().map(|c| c.f.radius() as usize).max() {
            for d in 0..=r {
                offsets.push(d);
                offsets.push(len - 1 - d);
            }
        }
        let mut tracked = vec![plan.record_events; 2 * len];
        for d in offsets {
            tracked[d] = true;
            tracked[d + len] = true;
        }
        let max_block = blocks.iter().map(|b| b.m).max().unwrap_or(0);
        let margin = max_block.max(spec.radius() as usize) + 2;
        if !periodic && spec.radius() as usize > HALO {
            return Err(XwalkError::InvalidWindow(format!(
                "radius {} exceeds the frozen halo of {HALO} sites",
                spec.radius()
            )));
        }
        let log = plan.record_events.then(|| EventLog::new(state.clone()));
        let mut e = Self {
            spec,
            state,
            len,
            periodic,
            w,
            ex_bonds,
            bond_scale,
            other_total,
            walker_total,
            lambda,
            speed_change,
            walker,
            macro_cum,
            macro_jumps,
            clocks,
            tracked,
            margin,
            xi0: 0,
            additive: CompensatedSum::new(),
            occupation: CompensatedSum::new(),
            blocks,
            last_t: 0.0,
            counts: EventCounts::default(),
            log,
            first_macro: None,
        };
        e.check_margin(0.0)?;
        e.refresh_walker_views();
        Ok(e)
    }

    #[inline]
    fn read(&self, idx: i64) -> u8 {
        let len = self.len as i64;
        if (0..len).contains(&idx) {
            return self.state.occupancy()[idx as usize];
        }
        if self.periodic {
            self.state.occupancy()[idx.rem_euclid(len) as usize]
        } else {
            self.state.get(self.state.lo() + idx)
        }
    }

    #[inline]
    fn pattern(&self, center: i64, radius: u32) -> usize {
        let r = radius as i64;
        let mut p = 0usize;
        for k in -r..=r {
            p |= (self.read(center + k) as usize) << (k + r);
        }
        p
    }

    fn check_margin(&self, time: f64) -> Result<()> {
        if !self.periodic && (self.w < self.margin || self.w + self.margin >= self.len) {
            return Err(XwalkError::WindowExhausted { time });
        }
        Ok(())
    }

    fn refresh_walker_views(&mut self) {
        let w = self.w as i64;
        self.xi0 = self.read(w);
        for k in 0..self.blocks.len() {
            let m = self.blocks[k].m as i64;
            self.blocks[k].sum = (1..=m).map(|z| self.read(w + z) as i64).sum();
        }
        self.refresh_clocks();
    }

    fn refresh_clocks(&mut self) {
        let w = self.w as i64;
        for k in 0..self.clocks.len() {
            let p = self.pattern(w, self.clocks[k].f.radius());
            let c = &mut self.clocks[k];
            c.rate = c.f.eval(p) * c.inv_sup;
        }
    }

    /// Integrates the tracked quantities up to `t`. Returns the crossing time of
    /// a time-changed macroscopic clock if one fires first.
    fn advance(&mut self, t: f64) -> Option<f64> {
        let dt = t - self.last_t;
        let mut crossing: Option<(f64, usize)> = None;
        for (k, c) in self.clocks.iter().enumerate() {
            let need = c.threshold - c.integral;
            if c.rate > 0.0 && c.rate * dt >= need {
                let tau = self.last_t + need / c.rate;
                if crossing.is_none_or(|(s, _)| tau < s) {
                    crossing = Some((tau, k));
                }
            }
        }
        let upto = crossing.map_or(t, |(tau, _)| tau);
        let dt = upto - self.last_t;
        let xi = self.xi0 as f64;
        self.occupation.add(xi * dt);
        self.additive.add((1.0 - 2.0 * xi) * dt);
        for b in &mut self.blocks {
            b.integral.add(b.sum as f64 * dt);
        }
        for c in &mut self.clocks {
            c.integral += c.rate * dt;
        }
        self.last_t = upto;
        crossing.map(|(tau, k)| {
            self.first_macro = Some(MacroJumpRecord {
                time: tau,
                z: self.clocks[k].z,
            });
            self.counts.macro_jumps += 1;
            tau
        })
    }

    #[inline]
    fn rel(&self, i: usize) -> usize {
        if i >= self.w {
            i - self.w
        } else {
            i + self.len - self.w
        }
    }

    fn log_event(&mut self, time: f64, kind: EventKind) {
        if let Some(log) = &mut self.log {
            log.events.push(LoggedEvent { time, kind });
        }
    }

    /// Applies a tracked exchange at bond (i, j) whose occupations differ.
    fn tracked_exchange(&mut self, i: usize, j: usize, time: f64) {
        let occ = self.state.occupancy_mut();
        let (u, v) = (occ[i], occ[j]);
        occ[i] = v;
        occ[j] = u;
        if i == self.w {
            self.xi0 = v;
        } else if j == self.w {
            self.xi0 = u;
        }
        let d = self.rel(i);
        let d1 = self.rel(j);
        let delta = v as i64 - u as i64;
        for b in &mut self.blocks {
            let inside = |x: usize| (x >= 1 && x <= b.m) as i64;
            b.sum += delta * (inside(d) - inside(d1));
        }
        if !self.clocks.is_empty() {
            self.refresh_clocks();
        }
        if self.log.is_some() {
            let site = self.state.lo() + i as i64;
            self.log_event(time, EventKind::Exchange { site });
        }
    }

    fn move_walker(&mut self, step: i64, time: f64, kind: EventKind) -> Result<()> {
        let len = self.len as i64;
        let target = self.w as i64 + step;
        let new_w = if self.periodic {
            target.rem_euclid(len) as usize
        } else {
            if target < 0 || target >= len {
                return Err(XwalkError::WindowExhausted { time });
            }
            target as usize
        };
        let old_w = self.w as i64;
        self.w = new_w;
        self.state.set_walker(self.state.walker() + step);
        self.check_margin(time)?;
        if step == 1 || step == -1 {
            self.xi0 = self.read(new_w as i64);
            for k in 0..self.blocks.len() {
                let m = self.blocks[k].m as i64;
                let delta = if step == 1 {
                    self.read(old_w + m + 1) as i64 - self.read(old_w + 1) as i64
                } else {
                    self.read(old_w) as i64 - self.read(old_w + m) as i64
                };
                self.blocks[k].sum += delta;
            }
            self.refresh_clocks();
        } else {
            self.refresh_walker_views();
        }
        self.log_event(time, kind);
        Ok(())
    }

    /// Runs the proposals of (t0, t1]. Returns the stopping time if the run ended.
    fn run_interval<R: RngCore + ?Sized>(
        &mut self,
        t0: f64,
        t1: f64,
        stop_at_macro: bool,
        rng: &mut R,
    ) -> Result<Option<f64>> {
        let dt = t1 - t0;
        let mean = self.lambda * dt;
        if !(mean > 0.0) {
            return Ok(None);
        }
        let total = Poisson::new(mean)
            .map_err(|e| XwalkError::NumericalFailure(e.to_string()))?
            .sample(rng) as u64;
        self.counts.proposals += total;
        let mut last_index = 0u64;
        let mut last_pos = 0.0f64;
        let mut stamp = |i: u64, rng: &mut R| -> Result<f64> {
            let k = (i - last_index) as f64;
            let m = (total - i + 1) as f64;
            let b = if k == 1.0 {
                let u = 1.0 - uniform53(rng.next_u64());
                -(u.ln() / m).exp_m1()
            } else {
                Beta::new(k, m)
                    .map_err(|e| XwalkError::NumericalFailure(e.to_string()))?
                    .sample(rng)
            };
            last_pos += (1.0 - last_pos) * b;
            last_index = i;
            Ok(t0 + dt * last_pos)
        };

        let len = self.len;
        let ex_bonds = self.ex_bonds;
        let scale = self.bond_scale;
        let mut exchanges = 0u64;
        let mut i = 0u64;
        while i < total {
            i += 1;
            let slot = (uniform53(rng.next_u64()) * scale) as usize;
            if slot < ex_bonds {
                if let Some((f, inv_max)) = self.speed_change {
                    let p = self.pattern(slot as i64, f.radius());
                    if uniform53(rng.next_u64()) >= f.eval(p) * inv_max {
                        continue;
                    }
                }
                exchanges += 1;
                let a = slot;
                let b = if a + 1 == len { 0 } else { a + 1 };
                let occ = self.state.occupancy_mut();
                let (u, v) = (occ[a], occ[b]);
                // branch-free for untracked bonds: swapping equal values is the identity
                if self.tracked[a + len - self.w] {
                    if u == v {
                        continue;
                    }
                    let t = stamp(i, rng)?;
                    if let Some(tau) = self.advance(t) {
                        self.counts.exchanges += exchanges;
                        return Ok(Some(tau));
                    }
                    self.tracked_exchange(a, b, t);
                } else {
                    occ[a] = v;
                    occ[b] = u;
                }
                continue;
            }
            let v = uniform53(rng.next_u64()) * self.other_total;
            if v < self.walker_total {
                let step = match &self.walker {
                    WalkerMode::Nearest { beta_n, alpha_n } => {
                        let right = if self.xi0 == 0 { *beta_n } else { *alpha_n };
                        if v < right {
                            1
                        } else {
                            -1
                        }
                    }
                    WalkerMode::General { cum, jumps } => {
                        let k = cum.partition_point(|&c| c <= v).min(cum.len() - 1);
                        let lo = if k == 0 { 0.0 } else { cum[k - 1] };
                        let u = (v - lo) / (cum[k] - lo);
                        let (z, f, inv) = &jumps[k];
                        let p = self.pattern(self.w as i64, f.radius());
                        if u >= f.eval(p) * inv {
                            continue;
                        }
                        *z
                    }
                };
                if step > 0 {
                    self.counts.walks_right += 1;
                } else {
                    self.counts.walks_left += 1;
                }
                let t = stamp(i, rng)?;
                if let Some(tau) = self.advance(t) {
                    self.counts.exchanges += exchanges;
                    return Ok(Some(tau));
                }
                self.move_walker(step, t, EventKind::Walk { step })?;
            } else {
                let v = v - self.walker_total;
                let k = self
                    .macro_cum
                    .partition_point(|&c| c <= v)
                    .min(self.macro_cum.len() - 1);
                let (z, f, inv) = self.macro_jumps[k];
                let p = self.pattern(self.w as i64, f.radius());
                if uniform53(rng.next_u64()) >= f.eval(p) * inv {
                    continue;
                }
                self.counts.macro_jumps += 1;
                let t = stamp(i, rng)?;
                if let Some(tau) = self.advance(t) {
                    self.counts.exchanges += exchanges;
                    return Ok(Some(tau));
                }
                let displacement = z * self.spec.n as i64;
                if self.first_macro.is_none() {
                    self.first_macro = Some(MacroJumpRecord { time: t, z });
                }
                self.move_walker(displacement, t, EventKind::MacroJump { z, displacement })?;
                if stop_at_macro {
                    self.counts.exchanges += exchanges;
                    return Ok(Some(t));
                }
            }
        }
        self.counts.exchanges += exchanges;
        Ok(None)
    }

    fn totals(&self, time: f64) -> RunningTotals {
        RunningTotals {
            time,
            additive: self.additive.value(),
            occupation_integral: self.occupation.value(),
        }
    }
}

/// Simulates the dynamics from `initial` over [0, T] and records the plan's observables.
///
/// Observers are called at their declared times with the exact state. The run
/// stops early at the first macroscopic jump if the plan asks for it; samples
/// after that time are not recorded.
pub fn simulate<R: Rng + ?Sized>(
    spec: &DynamicsSpec,
    initial: LatticeState,
    plan: &ObservationPlan,
    observers: &mut [&mut dyn Observer],
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    spec.validate()?;
    spec.validate_window(initial.len(), initial.boundary())?;
    plan.validate(spec.horizon, spec.long_range.len())?;
    let horizon = spec.horizon;
    let n = spec.n;

    let mut checkpoints: Vec<f64> = plan.sample_times.iter().chain(&plan.snapshot_times).copied().collect();
    let observer_times: Vec<Vec<f64>> = observers.iter().map(|o| o.times()).collect();
    for ts in &observer_times {
        for &t in ts {
            if !(0.0..=horizon).contains(&t) {
                return Err(XwalkError::InvalidParameter {
                    name: "observer",
                    reason: format!("time {t} outside [0, {horizon}]"),
                });
            }
            checkpoints.push(t);
        }
    }
    checkpoints.push(0.0);
    checkpoints.push(horizon);
    checkpoints.sort_by(f64::total_cmp);
    checkpoints.dedup();

    let mut engine = Engine::new(spec, initial, plan)?;
    let nearest = matches!(spec.walker, WalkerSpec::NearestNeighbor(_));
    let drift = match &spec.walker {
        WalkerSpec::NearestNeighbor(r) => r.beta - r.alpha,
        WalkerSpec::General { .. } => 0.0,
    };
    let mut times = Vec::new();
    let mut x_over_n = Vec::new();
    let mut additive = Vec::new();
    let mut mtilde = Vec::new();
    let mut occupation = Vec::new();
    let mut block_values: Vec<Vec<f64>> = vec![Vec::new(); engine.blocks.len()];
    let mut snapshots = Vec::new();
    let mut stopped_at = None;
    let scale = 1.0 / n as f64;

    let mut prev = 0.0;
    for &t in &checkpoints {
        if t > prev {
            let stop = engine.run_interval(prev, t, plan.stop_at_first_macro_jump, rng)?;
            if let Some(tau) = stop {
                stopped_at = Some(tau);
                break;
            }
            if let Some(tau) = engine.advance(t) {
                stopped_at = Some(tau);
                break;
            }
            prev = t;
        }
        let totals = engine.totals(t);
        if plan.sample_times.contains(&t) {
            let x = engine.state.walker() as f64 * scale;
            let a = totals.additive;
            times.push(t);
            x_over_n.push(x);
            additive.push(a);
            mtilde.push(x - drift * a);
            occupation.push(totals.occupation_integral);
            for (k, b) in engine.blocks.iter().enumerate() {
                block_values[k].push(b.integral.value());
            }
        }
        if plan.snapshot_times.contains(&t) {
            for &frame in &plan.frames {
                snapshots.push(empirical_measure(&engine.state, n, plan.bin_width, frame, t)?);
            }
        }
        for (o, ts) in observers.iter_mut().zip(&observer_times) {
            if ts.contains(&t) {
                o.observe(&engine.state, &totals);
            }
        }
        if plan.stop_at_first_macro_jump && engine.first_macro.is_some() {
            stopped_at = engine.first_macro.map(|m| m.time);
            break;
        }
    }

    let blocks = engine
        .blocks
        .iter()
        .zip(&plan.epsilons)
        .zip(block_values)
        .map(|((b, &eps), integrals)| BlockIntegral {
            epsilon: eps,
            block: b.m,
            integrals,
        })
        .collect();
    Ok(TrajectoryRecord {
        n,
        times,
        x_over_n,
        additive,
        mtilde: nearest.then_some(mtilde),
        occupation_integral: occupation,
        blocks,
        snapshots,
        counts: engine.counts,
        first_macro_jump: engine.first_macro,
        stopped_at,
        final_state: engine.state,
        event_log: engine.log,
    })
}
