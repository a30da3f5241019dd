//! Walker with rare macroscopic jumps: the limiting piecewise-deterministic
//! walk and the time-changed Poisson coupling of first jumps.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, XwalkError};
use crate::hydro::{drift_gamma, drift_speed_bound, DensityField};
use crate::kmc::{simulate, DynamicsSpec, MacroClock, ObservationPlan};
use crate::lattice::{LatticeState, LocalFunction};
use crate::observables::MacroJumpRecord;
use crate::stats::{ks_critical_value, ks_p_value, ks_two_sample};

/// Table z ↦ γ̃_z with precomputed sup norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroJumpSpec {
    jumps: Vec<(i64, LocalFunction)>,
    sups: Vec<f64>,
}

impl MacroJumpSpec {
    pub fn new(jumps: Vec<(i64, LocalFunction)>) -> Result<Self> {
        let mut zs: Vec<i64> = jumps.iter().map(|(z, _)| *z).collect();
        zs.sort_unstable();
        if zs.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("long_range", "duplicate jump sizes"));
        }
        if zs.contains(&0) {
            return Err(invalid("long_range", "jump size 0 is not allowed"));
        }
        let sups: Vec<f64> = jumps.iter().map(|(_, f)| f.sup()).collect();
        if sups.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(invalid("long_range", "every rate must have a positive finite sup"));
        }
        Ok(Self { jumps, sups })
    }

    pub fn empty() -> Self {
        Self {
            jumps: Vec::new(),
            sups: Vec::new(),
        }
    }

    pub fn jumps(&self) -> &[(i64, LocalFunction)] {
        &self.jumps
    }

    pub fn sups(&self) -> &[f64] {
        &self.sups
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Σ_z ‖γ̃_z‖∞.
    pub fn total_sup(&self) -> f64 {
        self.sups.iter().sum()
    }

    /// γ̃_z(ρ) = ν_ρ(γ̃_z) for the k-th entry.
    pub fn limit_rate(&self, k: usize, rho: f64) -> f64 {
        self.jumps[k].1.product_expectation(rho)
    }

    pub fn max_abs_z(&self) -> i64 {
        self.jumps.iter().map(|(z, _)| z.abs()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitJump {
    pub time: f64,
    pub z: i64,
}

/// Path of the limit walk. A jump at time τ appears as two consecutive samples
/// (τ, x(τ−)) and (τ, x(τ)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitWalk {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub jumps: Vec<LimitJump>,
    pub horizon: f64,
}

impl LimitWalk {
    pub fn first_jump(&self) -> Option<LimitJump> {
        self.jumps.first().copied()
    }

    /// x(t), right-continuous, linear between samples.
    pub fn position(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.x[0];
        }
        if k >= self.times.len() {
            return self.x[self.x.len() - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        self.x[k - 1] + s * (self.x[k] - self.x[k - 1])
    }

    /// Largest |Δx/Δt| over drift steps (jumps excluded).
    pub fn max_drift_slope(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.x.windows(2))
            .filter(|(t, _)| t[1] > t[0])
            .map(|(t, x)| (x[1] - x[0]).abs() / (t[1] - t[0]))
            .fold(0.0, f64::max)
    }
}

/// Half-width of a spatial domain that contains the limit walk up to `horizon`
/// unless more than mean + 6 sd + 2 jumps occur.
pub fn reach_half_width(drift_map: &[(i64, LocalFunction)], macros: &MacroJumpSpec, horizon: f64) -> f64 {
    let mean = macros.total_sup() * horizon;
    let jumps = (mean + 6.0 * mean.sqrt() + 2.0).ceil();
    drift_speed_bound::<f64>(drift_map) * horizon + macros.max_abs_z() as f64 * jumps
}

/// RK4 for x′ = γ(u(t, x)) with optional time-change integrals
/// Λ_k′ = γ̃_k(u(t, x))/‖γ̃_k‖∞ carried along.
struct Flow<'a> {
    field: &'a dyn DensityField<f64>,
    drift_map: &'a [(i64, LocalFunction)],
    macros: &'a MacroJumpSpec,
    clocks: bool,
}

impl Flow<'_> {
    fn dim(&self) -> usize {
        1 + if self.clocks { self.macros.jumps.len() } else { 0 }
    }

    fn density(&self, t: f64, x: f64) -> Result<f64> {
        let (lo, hi) = self.field.x_range();
        if !(x >= lo && x <= hi) {
            return Err(XwalkError::DomainExhausted { t, x });
        }
        self.field.density(t, x)
    }

    fn deriv(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let rho = self.density(t, y[0])?;
        out[0] = drift_gamma(self.drift_map, rho);
        if self.clocks {
            for k in 0..self.macros.jumps.len() {
                out[1 + k] = self.macros.limit_rate(k, rho) / self.macros.sups[k];
            }
        }
        Ok(())
    }

    fn step(&self, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        let mut k1 = vec![0.0; d];
        let mut k2 = vec![0.0; d];
        let mut k3 = vec![0.0; d];
        let mut k4 = vec![0.0; d];
        let mut tmp = vec![0.0; d];
        self.deriv(t, y, &mut k1)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        self.deriv(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        self.deriv(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..d {
            tmp[i] = y[i] + h * k3[i];
        }
        self.deriv(t + h, &tmp, &mut k4)?;
        Ok((0..d)
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
}

fn check_horizon(horizon: f64, dt: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("{horizon} must be positive")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    Ok(())
}

/// Samples the limit walk: drift γ(u(t, x)) between jumps, jumps of size z at
/// rate ν_{u(t,x)}(γ̃_z) by thinning against Σ_z ‖γ̃_z‖∞. `field` is the
/// lab-frame density u, which the walker does not perturb.
pub fn sample_limit_walk<R: Rng + ?Sized>(
    field: &dyn DensityField<f64>,
    drift_map: &[(i64, LocalFunction)],
    macros: &MacroJumpSpec,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<LimitWalk> {
    check_horizon(horizon, dt)?;
    let flow = Flow {
        field,
        drift_map,
        macros,
        clocks: false,
    };
    let lambda = macros.total_sup();
    let proposal = if lambda > 0.0 {
        Some(Exp::new(lambda).map_err(|e| invalid("long_range", e.to_string()))?)
    } else {
        None
    };
    let mut walk = LimitWalk {
        times: vec![0.0],
        x: vec![0.0],
        jumps: Vec::new(),
        horizon,
    };
    let mut t = 0.0;
    let mut x = vec![0.0];
    // a jump at the origin must see a domain point
    flow.density(0.0, 0.0)?;
    loop {
        let next = proposal.as_ref().map_or(f64::INFINITY, |e| t + e.sample(rng));
        let stop = next.min(horizon);
        let steps = ((stop - t) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (stop - t) / steps as f64;
        for k in 0..steps {
            let tk = t + k as f64 * h;
            x = flow.step(tk, &x, h)?;
            walk.times.push(if k + 1 == steps { stop } else { tk + h });
            walk.x.push(x[0]);
        }
        t = stop;
        if next >= horizon {
            break;
        }
        let mut u = rng.random::<f64>() * lambda;
        let mut k = 0;
        while k + 1 < macros.sups.len() && u >= macros.sups[k] {
            u -= macros.sups[k];
            k += 1;
        }
        let rho = flow.density(t, x[0])?;
        if rng.random::<f64>() * macros.sups[k] < macros.limit_rate(k, rho) {
            let z = macros.jumps[k].0;
            x[0] += z as f64;
            flow.density(t, x[0])?;
            walk.jumps.push(LimitJump { time: t, z });
            walk.times.push(t);
            walk.x.push(x[0]);
        }
    }
    Ok(walk)
}

/// Limit-side first jump under given thresholds: the k-th clock fires when
/// ∫₀ᵗ γ̃_k(û(s, 0))/‖γ̃_k‖∞ ds reaches `thresholds[k]`, with û(s, 0) = u(s, x_s)
/// along the drift path. Returns `None` when nothing fires before `horizon`.
pub fn limit_first_jump(
    field: &dyn DensityField<f64>,
    drift_map: &[(i64, LocalFunction)],
    macros: &MacroJumpSpec,
    thresholds: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<Option<MacroJumpRecord>> {
    check_horizon(horizon, dt)?;
    if thresholds.len() != macros.jumps.len() {
        return Err(invalid("thresholds", "one threshold per jump size"));
    }
    let flow = Flow {
        field,
        drift_map,
        macros,
        clocks: true,
    };
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let mut y = vec![0.0; flow.dim()];
    for s in 0..steps {
        let t = s as f64 * h;
        let next = flow.step(t, &y, h)?;
        let fired = (0..thresholds.len()).filter(|&k| next[1 + k] >= thresholds[k]);
        let mut best: Option<MacroJumpRecord> = None;
        for k in fired {
            // the clock is monotone: bisect on the length of a partial step
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if flow.step(t, &y, mid)?[1 + k] >= thresholds[k] {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let tau = t + hi;
            if best.is_none_or(|b| tau < b.time) {
                best = Some(MacroJumpRecord {
                    time: tau,
                    z: macros.jumps[k].0,
                });
            }
        }
        if best.is_some() {
            return Ok(best);
        }
        y = next;
    }
    Ok(None)
}

/// First macroscopic jumps of the microscopic and limit walks driven by the
/// same base Poisson clocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledJump {
    pub micro: Option<MacroJumpRecord>,
    pub limit: Option<MacroJumpRecord>,
}

impl CoupledJump {
    /// Some side saw no jump before the horizon.
    pub fn censored(&self) -> bool {
        self.micro.is_none() || self.limit.is_none()
    }

    /// |τⁿ − τ| when both sides jumped.
    pub fn time_gap(&self) -> Option<f64> {
        Some((self.micro?.time - self.limit?.time).abs())
    }

    pub fn same_index(&self) -> bool {
        matches!((self.micro, self.limit), (Some(a), Some(b)) if a.z == b.z)
    }
}

/// Draws the first arrivals Sₖ ~ Exp(‖γ̃ₖ‖∞) of the base clocks.
pub fn draw_thresholds<R: Rng + ?Sized>(macros: &MacroJumpSpec, rng: &mut R) -> Vec<f64> {
    macros
        .sups
        .iter()
        .map(|&s| -(1.0 - rng.random::<f64>()).ln() / s)
        .collect()
}

/// Couples the first macroscopic jump of the lattice walker (spec, initial) with
/// that of the limit walk in the density field u. The base clocks are drawn
/// first from `rng`, which then drives the lattice run.
pub fn coupled_first_jump<R: Rng + ?Sized>(
    spec: &DynamicsSpec,
    initial: LatticeState,
    field: &dyn DensityField<f64>,
    dt: f64,
    rng: &mut R,
) -> Result<CoupledJump> {
    let macros = MacroJumpSpec::new(spec.long_range.clone())?;
    if macros.is_empty() {
        return Err(invalid("long_range", "coupling needs at least one macroscopic jump"));
    }
    let thresholds = draw_thresholds(&macros, rng);
    let plan = ObservationPlan::endpoint(spec.horizon).with_macro_clock(
        MacroClock::TimeChange {
            thresholds: thresholds.clone(),
        },
        true,
    );
    let rec = simulate(spec, initial, &plan, &mut [], rng)?;
    let limit = limit_first_jump(field, &spec.walker.jump_table(), &macros, &thresholds, spec.horizon, dt)?;
    Ok(CoupledJump {
        micro: rec.first_macro_jump,
        limit,
    })
}

/// First macroscopic jump of an uncoupled lattice run (uniformized clocks).
pub fn micro_first_jump<R: Rng + ?Sized>(
    spec: &DynamicsSpec,
    initial: LatticeState,
    rng: &mut R,
) -> Result<Option<MacroJumpRecord>> {
    let plan = ObservationPlan::endpoint(spec.horizon).with_macro_clock(MacroClock::Uniformized, true);
    Ok(simulate(spec, initial, &plan, &mut [], rng)?.first_macro_jump)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    /// Critical value at level 0.01.
    pub critical: f64,
    pub na: usize,
    pub nb: usize,
}

impl KsReport {
    pub fn accepts_at(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Minimum sample size per side for [`first_jump_distribution_test`].
pub const MIN_KS_SAMPLES: usize = 500;

/// Two-sample KS distance between first-jump times, with censored samples
/// (`None`) and times past the horizon both set to the horizon.
pub fn first_jump_distribution_test(a: &[Option<f64>], b: &[Option<f64>], horizon: f64) -> Result<KsReport> {
    if a.len() < MIN_KS_SAMPLES || b.len() < MIN_KS_SAMPLES {
        return Err(XwalkError::InsufficientData(format!(
            "{} and {} samples, need {MIN_KS_SAMPLES} per side",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).all(|s| s.is_none_or(|t| t >= horizon)) {
        return Err(XwalkError::InsufficientData("every sample is censored".into()));
    }
    let cut = |xs: &[Option<f64>]| -> Vec<f64> { xs.iter().map(|s| s.map_or(horizon, |t| t.min(horizon))).collect() };
    let (xa, xb) = (cut(a), cut(b));
    let d = ks_two_sample(&xa, &xb)?;
    Ok(KsReport {
        statistic: d,
        p_value: ks_p_value(d, xa.len(), xb.len()),
        critical: ks_critical_value(0.01, xa.len(), xb.len()),
        na: xa.len(),
        nb: xb.len(),
    })
}
