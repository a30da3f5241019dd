//! Replica farms over an n-sweep and their aggregation into a convergence report.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use xwalk_core::hydro::{
    drift_gamma, solve_drift_ode, solve_phi_diffusion, DensityField, HeatSolution, PdeGrid, WalkerPath,
};
use xwalk_core::kmc::{simulate, WalkerSpec};
use xwalk_core::lattice::{sample_initial, Profile, ProfileShape};
use xwalk_core::macrojump::{coupled_first_jump, first_jump_distribution_test, MIN_KS_SAMPLES};
use xwalk_core::observables::{bin_edge, replacement_statistic, Frame, TrajectoryRecord};
use xwalk_core::rng::{path_seed, stream_rng};
use xwalk_core::stats::{median, Moments};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Context, Result};

/// The lab-frame limit density u(t, x).
#[derive(Debug, Clone)]
pub enum LimitField {
    Closed(HeatSolution<f64>),
    Grid(PdeGrid<f64>),
}

impl DensityField<f64> for LimitField {
    fn density(&self, t: f64, x: f64) -> xwalk_core::Result<f64> {
        match self {
            LimitField::Closed(h) => h.density(t, x),
            LimitField::Grid(g) => g.density(t, x),
        }
    }

    fn x_range(&self) -> (f64, f64) {
        match self {
            LimitField::Closed(h) => h.x_range(),
            LimitField::Grid(g) => g.x_range(),
        }
    }
}

/// Deterministic limit objects of a configuration, solved once per run.
#[derive(Debug, Clone)]
pub struct LimitObjects {
    pub profile: Profile,
    /// u(t, x); absent when the exchange rates have no known hydrodynamic equation.
    pub field: Option<LimitField>,
    /// f(t); absent with macroscopic jumps, where the limit walk is random.
    pub path: Option<WalkerPath<f64>>,
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

impl LimitObjects {
    pub fn solve(cfg: &ExperimentConfig) -> Result<Self> {
        let profile = cfg.profile()?;
        let horizon = cfg.run.horizon;
        let kappa = cfg.hydro.diffusivity * cfg.dynamics.exchange_multiplier;
        let field = match cfg.phi_coefficient() {
            Some(a) if kappa > 0.0 => {
                let closed = a == 0.0 && !matches!(profile.shape, ProfileShape::Ramp { .. });
                if closed {
                    Some(LimitField::Closed(
                        HeatSolution::new(&profile, kappa).context("heat solution")?,
                    ))
                } else {
                    let params = cfg.grid_params()?.with_diffusivity(kappa);
                    Some(LimitField::Grid(
                        solve_phi_diffusion(&profile, a, horizon, &params).context("limit density")?,
                    ))
                }
            }
            _ => None,
        };
        let path = match (&field, cfg.dynamics.long_range.is_empty()) {
            (Some(u), true) => {
                let jumps = cfg.walker()?.jump_table();
                let drift = |rho: f64| drift_gamma(&jumps, rho);
                Some(solve_drift_ode(u, &drift, horizon, cfg.hydro.ode_dt).context("walker ODE")?)
            }
            _ => None,
        };
        Ok(Self { profile, field, path })
    }

    pub fn f(&self, t: f64) -> Option<f64> {
        self.path.as_ref().map(|p| p.at(t))
    }

    pub fn u(&self, t: f64, x: f64) -> Option<f64> {
        self.field.as_ref().and_then(|u| u.density(t, x).ok())
    }

    /// û(t, x) = u(t, x + f(t)).
    pub fn u_hat(&self, t: f64, x: f64) -> Option<f64> {
        self.u(t, x + self.f(t)?)
    }

    /// Average of the limit density over [lo, lo + h] in the given frame.
    pub fn bin_average(&self, frame: Frame, t: f64, lo: f64, h: f64) -> Option<f64> {
        let shift = match frame {
            Frame::Lab => 0.0,
            Frame::Walker => self.f(t)?,
        };
        if t == 0.0 {
            return Some(self.profile.cell_average(lo + shift, lo + shift + h));
        }
        let mut acc = 0.0;
        for (node, w) in GAUSS4 {
            acc += 0.5 * w * self.u(t, lo + shift + 0.5 * h * (node + 1.0))?;
        }
        Some(acc)
    }
}

/// One simulated replica.
#[derive(Debug, Clone)]
pub struct ReplicaRun {
    pub n: u32,
    pub replica: u64,
    pub seed: u64,
    pub record: TrajectoryRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let m = Moments::from_slice(xs);
        Self {
            mean: m.mean,
            stderr: m.stderr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingError {
    /// sup_t |mean(x_t/n) − f(t)| over the sample times.
    pub sup: f64,
    /// Standard error of the mean at the maximizing time.
    pub stderr: f64,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinEstimate {
    pub lo: f64,
    pub density: f64,
    pub stderr: f64,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySnapshot {
    pub frame: Frame,
    pub t: f64,
    /// Bins inside [−range, range].
    pub bins: Vec<BinEstimate>,
    /// Mean over bins of |density − reference|.
    pub mean_abs_error: Option<f64>,
    /// Mean over bins of the Monte Carlo standard error.
    pub uncertainty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplacementRow {
    pub epsilon: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleRatio {
    pub variance: f64,
    pub variance_stderr: f64,
    /// (α + β)T/n.
    pub expected: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NReport {
    pub n: u32,
    pub replicas: usize,
    /// x_T/n.
    pub final_position: Estimate,
    pub reference_final: Option<f64>,
    /// x_T/(nT).
    pub speed: Estimate,
    pub walker: Vec<CurvePoint>,
    pub walker_error: Option<TrackingError>,
    pub densities: Vec<DensitySnapshot>,
    pub replacement: Vec<ReplacementRow>,
    pub martingale: Option<MartingaleRatio>,
    pub runtime_secs: f64,
}

impl NReport {
    /// sup over snapshot times of the mean absolute bin error in a frame, with
    /// the uncertainty at the maximizing snapshot.
    pub fn density_error_sup(&self, frame: Frame) -> Option<(f64, f64)> {
        self.densities
            .iter()
            .filter(|d| d.frame == frame)
            .filter_map(|d| d.mean_abs_error.map(|e| (e, d.uncertainty)))
            .reduce(|a, b| if b.0 > a.0 { b } else { a })
    }

    pub fn density_error_at(&self, frame: Frame, t: f64) -> Option<(f64, f64)> {
        self.densities
            .iter()
            .find(|d| d.frame == frame && (d.t - t).abs() < 1e-12)
            .and_then(|d| d.mean_abs_error.map(|e| (e, d.uncertainty)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MacroRow {
    pub replica: u64,
    pub n: u32,
    pub tau_n: Option<f64>,
    pub z_n: Option<i64>,
    pub tau: Option<f64>,
    pub z: Option<i64>,
    pub censored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsSummary {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacroEntry {
    pub n: u32,
    pub pairs: usize,
    /// Pairs in which at least one side jumped before the horizon.
    pub jumped: usize,
    /// Median |τⁿ − τ| over jumped pairs; a one-sided jump counts as a gap of T.
    pub median_gap: f64,
    /// Fraction of jumped pairs whose first jumps have the same size.
    pub agreement: f64,
    /// Two-sample KS between the lattice and limit first-jump times.
    pub ks: Option<KsSummary>,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub horizon: f64,
    pub entries: Vec<NReport>,
    pub macro_jumps: Vec<MacroEntry>,
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub limits: LimitObjects,
    pub runs: Vec<ReplicaRun>,
    pub report: ConvergenceReport,
}

pub(crate) fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))
}

/// Per-replica seed; independent of the order in which replicas are scheduled.
pub fn replica_seed(master: u64, n: u32, replica: u64) -> u64 {
    path_seed(master, &[n as u64, replica])
}

fn run_replica(cfg: &ExperimentConfig, profile: &Profile, n: u32, replica: u64) -> Result<ReplicaRun> {
    let seed = replica_seed(cfg.run.seed, n, replica);
    let wrap = |source| CliError::Run {
        n,
        replica,
        seed,
        source,
    };
    let spec = cfg.dynamics_spec(n)?;
    let window = cfg.window(n)?;
    let initial = sample_initial(profile, n, window, cfg.run.boundary, &mut stream_rng(seed, 0)).map_err(wrap)?;
    let record = simulate(&spec, initial, &cfg.plan(), &mut [], &mut stream_rng(seed, 1)).map_err(wrap)?;
    Ok(ReplicaRun {
        n,
        replica,
        seed,
        record,
    })
}

/// Simulates every (n, replica) pair. On failure the completed replicas are
/// returned alongside the first error.
pub fn simulate_replicas(cfg: &ExperimentConfig) -> (Vec<ReplicaRun>, Vec<f64>, Option<CliError>) {
    let profile = match cfg.profile() {
        Ok(p) => p,
        Err(e) => return (Vec::new(), Vec::new(), Some(e)),
    };
    let pool = match pool(cfg.run.threads) {
        Ok(p) => p,
        Err(e) => return (Vec::new(), Vec::new(), Some(e)),
    };
    let mut runs = Vec::new();
    let mut runtimes = Vec::new();
    for &n in &cfg.run.n_list {
        let start = Instant::now();
        let batch: Vec<Result<ReplicaRun>> = pool.install(|| {
            (0..cfg.run.replicas as u64)
                .into_par_iter()
                .map(|r| run_replica(cfg, &profile, n, r))
                .collect()
        });
        runtimes.push(start.elapsed().as_secs_f64());
        let mut error = None;
        for item in batch {
            match item {
                Ok(run) => runs.push(run),
                Err(e) => {
                    error.get_or_insert(e);
                }
            }
        }
        if error.is_some() {
            return (runs, runtimes, error);
        }
    }
    (runs, runtimes, None)
}

/// Simulates, aggregates and solves the limit objects.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let limits = LimitObjects::solve(cfg)?;
    let (runs, runtimes, error) = simulate_replicas(cfg);
    if let Some(e) = error {
        return Err(e);
    }
    let report = aggregate(cfg, &limits, &runs, &runtimes)?;
    Ok(Experiment {
        config: cfg.clone(),
        limits,
        runs,
        report,
    })
}

fn bin_range(range: f64, h: f64) -> (i64, i64) {
    let lo = (-range / h - 1e-9).ceil() as i64;
    let hi = (range / h + 1e-9).floor() as i64 - 1;
    (lo, hi)
}

/// Aggregates replica runs into per-n summaries. The result depends only on
/// the multiset of runs, not on their order, up to rounding of compensated sums.
pub fn aggregate(
    cfg: &ExperimentConfig,
    limits: &LimitObjects,
    runs: &[ReplicaRun],
    runtimes: &[f64],
) -> Result<ConvergenceReport> {
    let horizon = cfg.run.horizon;
    let walker = cfg.walker()?;
    let mut entries = Vec::new();
    for (k, &n) in cfg.run.n_list.iter().enumerate() {
        let mut group: Vec<&ReplicaRun> = runs.iter().filter(|r| r.n == n).collect();
        if group.is_empty() {
            continue;
        }
        group.sort_by_key(|r| r.replica);
        let records: Vec<&TrajectoryRecord> = group.iter().map(|r| &r.record).collect();

        let sample_times = &records[0].times;
        let mut walker_curve = Vec::new();
        for (i, &t) in sample_times.iter().enumerate() {
            let xs: Vec<f64> = records.iter().map(|r| r.x_over_n[i]).collect();
            let e = Estimate::of(&xs);
            walker_curve.push(CurvePoint {
                t,
                mean: e.mean,
                stderr: e.stderr,
                reference: limits.f(t),
            });
        }
        let walker_error = walker_curve
            .iter()
            .filter_map(|p| {
                p.reference.map(|f| TrackingError {
                    sup: (p.mean - f).abs(),
                    stderr: p.stderr,
                    time: p.t,
                })
            })
            .reduce(|a, b| if b.sup > a.sup { b } else { a });

        let finals: Vec<f64> = records.iter().map(|r| r.final_x_over_n()).collect();
        let speeds: Vec<f64> = finals.iter().map(|x| x / horizon).collect();

        let h = cfg.run.bin_width;
        let (b_lo, b_hi) = bin_range(cfg.run.density_range, h);
        let mut densities = Vec::new();
        for &frame in &cfg.run.frames {
            for &t in &cfg.snapshot_times() {
                let measures: Vec<_> = records
                    .iter()
                    .map(|r| {
                        r.snapshots
                            .iter()
                            .find(|m| m.frame == frame && (m.time - t).abs() < 1e-12)
                            .ok_or_else(|| CliError::Model {
                                context: format!("n = {n}"),
                                source: xwalk_core::XwalkError::InsufficientData(format!(
                                    "no {} snapshot at {t}",
                                    frame.as_str()
                                )),
                            })
                    })
                    .collect::<Result<_>>()?;
                let mut bins = Vec::new();
                for b in b_lo..=b_hi {
                    let xs: Vec<f64> = measures.iter().map(|m| m.mass(b) / h).collect();
                    let e = Estimate::of(&xs);
                    let lo = bin_edge(b, h);
                    bins.push(BinEstimate {
                        lo,
                        density: e.mean,
                        stderr: e.stderr,
                        reference: limits.bin_average(frame, t, lo, h),
                    });
                }
                let count = bins.len() as f64;
                let mean_abs_error = bins
                    .iter()
                    .map(|b| b.reference.map(|r| (b.density - r).abs()))
                    .sum::<Option<f64>>()
                    .map(|s| s / count);
                let uncertainty = bins.iter().map(|b| b.stderr).sum::<f64>() / count;
                densities.push(DensitySnapshot {
                    frame,
                    t,
                    bins,
                    mean_abs_error,
                    uncertainty,
                });
            }
        }

        let mut replacement = Vec::new();
        for &eps in &cfg.run.epsilons {
            let xs: Vec<f64> = records
                .iter()
                .map(|r| replacement_statistic(r, eps, horizon))
                .collect::<xwalk_core::Result<_>>()
                .context(format!("replacement statistic, n = {n}"))?;
            let e = Estimate::of(&xs);
            replacement.push(ReplacementRow {
                epsilon: eps,
                mean: e.mean,
                stderr: e.stderr,
            });
        }

        let martingale = match (&walker, records[0].mtilde.is_some()) {
            (WalkerSpec::NearestNeighbor(rates), true) => {
                let xs: Vec<f64> = records
                    .iter()
                    .map(|r| *r.mtilde.as_ref().and_then(|m| m.last()).expect("recorded"))
                    .collect();
                let m = Moments::from_slice(&xs);
                let se = Moments::variance_stderr(&xs);
                let expected = rates.total() * horizon / n as f64;
                Some(MartingaleRatio {
                    variance: m.variance,
                    variance_stderr: se,
                    expected,
                    ratio: m.variance / expected,
                    ratio_stderr: se / expected,
                })
            }
            _ => None,
        };

        entries.push(NReport {
            n,
            replicas: records.len(),
            final_position: Estimate::of(&finals),
            reference_final: limits.f(horizon),
            speed: Estimate::of(&speeds),
            walker: walker_curve,
            walker_error,
            densities,
            replacement,
            martingale,
            runtime_secs: runtimes.get(k).copied().unwrap_or(0.0),
        });
    }
    Ok(ConvergenceReport {
        horizon,
        entries,
        macro_jumps: Vec::new(),
    })
}

/// Couples the first macroscopic jump of each replica with the limit walk.
pub fn run_macro(cfg: &ExperimentConfig) -> Result<(Vec<MacroRow>, Vec<MacroEntry>)> {
    cfg.validate()?;
    if cfg.dynamics.long_range.is_empty() {
        return Err(CliError::Config {
            field: "dynamics.long_range".into(),
            reason: "the macro subcommand needs at least one macroscopic jump".into(),
        });
    }
    let limits = LimitObjects::solve(cfg)?;
    let field = limits.field.as_ref().ok_or_else(|| CliError::Config {
        field: "dynamics.speed_change".into(),
        reason: "no limit density for this exchange rate".into(),
    })?;
    let profile = cfg.profile()?;
    let pool = pool(cfg.run.threads)?;
    let horizon = cfg.run.horizon;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &n in &cfg.run.n_list {
        let start = Instant::now();
        let spec = cfg.dynamics_spec(n)?;
        let window = cfg.window(n)?;
        let batch: Vec<Result<MacroRow>> = pool.install(|| {
            (0..cfg.run.replicas as u64)
                .into_par_iter()
                .map(|r| {
                    let seed = replica_seed(cfg.run.seed, n, r);
                    let wrap = |source| CliError::Run {
                        n,
                        replica: r,
                        seed,
                        source,
                    };
                    let initial = sample_initial(&profile, n, window, cfg.run.boundary, &mut stream_rng(seed, 0))
                        .map_err(wrap)?;
                    let c = coupled_first_jump(&spec, initial, field, cfg.hydro.ode_dt, &mut stream_rng(seed, 1))
                        .map_err(wrap)?;
                    Ok(MacroRow {
                        replica: r,
                        n,
                        tau_n: c.micro.map(|j| j.time),
                        z_n: c.micro.map(|j| j.z),
                        tau: c.limit.map(|j| j.time),
                        z: c.limit.map(|j| j.z),
                        censored: c.censored(),
                    })
                })
                .collect()
        });
        let batch: Vec<MacroRow> = batch.into_iter().collect::<Result<_>>()?;
        let jumped: Vec<&MacroRow> = batch.iter().filter(|r| r.tau_n.is_some() || r.tau.is_some()).collect();
        let gaps: Vec<f64> = jumped
            .iter()
            .map(|r| match (r.tau_n, r.tau) {
                (Some(a), Some(b)) => (a - b).abs(),
                _ => horizon,
            })
            .collect();
        let agree = jumped.iter().filter(|r| r.z_n.is_some() && r.z_n == r.z).count();
        let micro: Vec<Option<f64>> = batch.iter().map(|r| r.tau_n).collect();
        let limit: Vec<Option<f64>> = batch.iter().map(|r| r.tau).collect();
        let ks = if batch.len() >= MIN_KS_SAMPLES {
            first_jump_distribution_test(&micro, &limit, horizon)
                .ok()
                .map(|k| KsSummary {
                    statistic: k.statistic,
                    p_value: k.p_value,
                })
        } else {
            None
        };
        entries.push(MacroEntry {
            n,
            pairs: batch.len(),
            jumped: jumped.len(),
            median_gap: if gaps.is_empty() { f64::NAN } else { median(&gaps) },
            agreement: if jumped.is_empty() {
                f64::NAN
            } else {
                agree as f64 / jumped.len() as f64
            },
            ks,
            runtime_secs: start.elapsed().as_secs_f64(),
        });
        rows.extend(batch);
    }
    Ok((rows, entries))
}
