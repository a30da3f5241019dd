//! Experiment configuration: a TOML file with the sections `profile`,
//! `dynamics`, `run`, `hydro`, `oracle` and `output`. Key names are listed in
//! `docs/config.md`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xwalk_core::hydro::{default_half_width, drift_speed_bound};
use xwalk_core::kmc::{DynamicsSpec, Exclusion, ObservationPlan, WalkerSpec};
use xwalk_core::lattice::{Boundary, LocalFunction, Profile, ProfileShape, WalkerRates, Window};
use xwalk_core::observables::Frame;
use xwalk_core::GridParams;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub profile: ProfileConfig,
    pub dynamics: DynamicsConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub hydro: HydroConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    #[serde(flatten)]
    pub shape: ProfileShape,
    /// Reference density ρ for entropy checks; derived from the shape if absent.
    #[serde(default)]
    pub reference_density: Option<f64>,
}

/// A local rate function written inline, e.g. `{ kind = "occupation", site = 0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateSpec {
    Constant {
        value: f64,
    },
    /// η(site).
    Occupation {
        site: i32,
    },
    /// `empty` + (`occupied` − `empty`)·η(0).
    OnOrigin {
        empty: f64,
        occupied: f64,
    },
    /// 1 + a(η(−1) + η(2)).
    Gradient {
        a: f64,
    },
    /// Values indexed by the pattern on [−radius, radius], bit k ↔ site k − radius.
    Table {
        radius: u32,
        table: Vec<f64>,
    },
}

impl RateSpec {
    pub fn build(&self) -> xwalk_core::Result<LocalFunction> {
        match self {
            RateSpec::Constant { value } => LocalFunction::constant(*value),
            RateSpec::Occupation { site } => LocalFunction::occupation(*site),
            RateSpec::OnOrigin { empty, occupied } => LocalFunction::on_origin(*empty, *occupied),
            RateSpec::Gradient { a } => LocalFunction::gradient_speed_change(*a),
            RateSpec::Table { radius, table } => LocalFunction::from_table(*radius, table.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpEntry {
    pub z: i64,
    #[serde(flatten)]
    pub rate: RateSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Walker rate to the right on an occupied site.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Walker rate to the right on an empty site.
    #[serde(default)]
    pub beta: Option<f64>,
    /// General walker jump table; replaces `alpha`/`beta`.
    #[serde(default)]
    pub walker: Vec<JumpEntry>,
    /// Exchange rate c₀; simple exclusion when absent.
    #[serde(default)]
    pub speed_change: Option<RateSpec>,
    /// Macroscopic jumps {z, γ̃_z}.
    #[serde(default)]
    pub long_range: Vec<JumpEntry>,
    #[serde(default = "one")]
    pub exchange_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_list: Vec<u32>,
    pub replicas: usize,
    pub horizon: f64,
    /// Times at which x/n, A and M̃ are recorded; defaults to the snapshot times and T.
    #[serde(default)]
    pub sample_times: Option<Vec<f64>>,
    /// Defaults to 0, T/4, T/2, 3T/4, T.
    #[serde(default)]
    pub snapshot_times: Option<Vec<f64>>,
    #[serde(default = "both_frames")]
    pub frames: Vec<Frame>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "bin_width")]
    pub bin_width: f64,
    /// Window half-width in units of n.
    #[serde(default = "window_factor")]
    pub window_factor: f64,
    #[serde(default = "frozen")]
    pub boundary: Boundary,
    #[serde(default = "one_u64")]
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    #[serde(default = "one_usize")]
    pub threads: usize,
    /// Density errors are taken over bins inside [−range, range].
    #[serde(default = "density_range")]
    pub density_range: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroConfig {
    #[serde(default = "dx")]
    pub dx: f64,
    #[serde(default = "dt")]
    pub dt: f64,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "one")]
    pub diffusivity: f64,
    #[serde(default = "ode_dt")]
    pub ode_dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "oracle_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "oracle_n")]
    pub n_list: Vec<u32>,
    #[serde(default = "oracle_rho")]
    pub densities: Vec<f64>,
    /// (α, β) pairs.
    #[serde(default = "oracle_rates")]
    pub rates: Vec<(f64, f64)>,
    #[serde(default = "oracle_trials")]
    pub trials: usize,
    #[serde(default = "oracle_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}
fn both_frames() -> Vec<Frame> {
    vec![Frame::Lab, Frame::Walker]
}
fn bin_width() -> f64 {
    0.1
}
fn window_factor() -> f64 {
    4.0
}
fn frozen() -> Boundary {
    Boundary::FrozenProfile
}
fn density_range() -> f64 {
    2.0
}
fn dx() -> f64 {
    0.01
}
fn dt() -> f64 {
    2.5e-4
}
fn ode_dt() -> f64 {
    1e-4
}
fn oracle_sizes() -> Vec<usize> {
    vec![4, 6, 8]
}
fn oracle_n() -> Vec<u32> {
    vec![1, 2, 4]
}
fn oracle_rho() -> Vec<f64> {
    vec![0.25, 0.5, 0.75]
}
fn oracle_rates() -> Vec<(f64, f64)> {
    vec![(1.0, 1.0), (2.0, 1.0), (0.5, 3.0)]
}
fn oracle_trials() -> usize {
    1000
}
fn oracle_tolerance() -> f64 {
    1e-9
}

impl Default for HydroConfig {
    fn default() -> Self {
        Self {
            dx: dx(),
            dt: dt(),
            half_width: None,
            diffusivity: 1.0,
            ode_dt: ode_dt(),
        }
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            sizes: oracle_sizes(),
            n_list: oracle_n(),
            densities: oracle_rho(),
            rates: oracle_rates(),
            trials: oracle_trials(),
            tolerance: oracle_tolerance(),
        }
    }
}

fn fail(field: impl Into<String>, reason: impl std::fmt::Display) -> CliError {
    CliError::Config {
        field: field.into(),
        reason: reason.to_string(),
    }
}

/// Sets `key = value` in a TOML tree; `key` is dotted, `value` is a TOML
/// literal or, failing that, a bare string.
pub fn apply_override(tree: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| fail(assignment, "overrides have the form key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(fail(key, "empty key segment"));
    }
    let mut table = tree;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| fail(key, format!("`{part}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Parses, applies overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut tree: toml::Table = toml::from_str(text).map_err(|e| fail("<file>", e.message()))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        let cfg: Self = toml::Value::Table(tree)
            .try_into()
            .map_err(|e: toml::de::Error| fail("<file>", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn profile(&self) -> Result<Profile> {
        let p = match &self.profile.shape {
            ProfileShape::Constant { value } => Profile::constant(*value),
            ProfileShape::Step { left, right } => Profile::step(*left, *right),
            ProfileShape::Ramp { left, right, width } => Profile::ramp(*left, *right, *width),
            ProfileShape::Piecewise { breakpoints, values } => Profile::piecewise(breakpoints.clone(), values.clone()),
        }
        .map_err(|e| fail("profile", e))?;
        match self.profile.reference_density {
            Some(rho) => p.with_reference(rho).map_err(|e| fail("profile.reference_density", e)),
            None => Ok(p),
        }
    }

    pub fn walker(&self) -> Result<WalkerSpec> {
        let d = &self.dynamics;
        match (d.alpha, d.beta, d.walker.is_empty()) {
            (Some(a), Some(b), true) => WalkerRates::new(a, b)
                .map(WalkerSpec::NearestNeighbor)
                .map_err(|e| fail("dynamics.alpha", e)),
            (None, None, false) => {
                let jumps = d
                    .walker
                    .iter()
                    .enumerate()
                    .map(|(k, j)| {
                        j.rate
                            .build()
                            .map(|f| (j.z, f))
                            .map_err(|e| fail(format!("dynamics.walker[{k}]"), e))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(WalkerSpec::General { jumps })
            }
            (None, None, true) => Err(fail("dynamics.alpha", "give alpha and beta or a walker table")),
            (Some(_), None, _) => Err(fail("dynamics.beta", "missing")),
            (None, Some(_), _) => Err(fail("dynamics.alpha", "missing")),
            (Some(_), Some(_), false) => Err(fail("dynamics.walker", "conflicts with alpha and beta")),
        }
    }

    pub fn rates(&self) -> Option<WalkerRates> {
        match self.walker() {
            Ok(WalkerSpec::NearestNeighbor(r)) => Some(r),
            _ => None,
        }
    }

    pub fn long_range(&self) -> Result<Vec<(i64, LocalFunction)>> {
        self.dynamics
            .long_range
            .iter()
            .enumerate()
            .map(|(k, j)| {
                j.rate
                    .build()
                    .map(|f| (j.z, f))
                    .map_err(|e| fail(format!("dynamics.long_range[{k}]"), e))
            })
            .collect()
    }

    pub fn exclusion(&self) -> Result<Exclusion> {
        match &self.dynamics.speed_change {
            None => Ok(Exclusion::Simple),
            Some(r) => r
                .build()
                .map(|rate| Exclusion::SpeedChange { rate })
                .map_err(|e| fail("dynamics.speed_change", e)),
        }
    }

    /// The `a` of a gradient speed change, 0 for simple exclusion, `None` otherwise.
    pub fn phi_coefficient(&self) -> Option<f64> {
        match &self.dynamics.speed_change {
            None => Some(0.0),
            Some(RateSpec::Gradient { a }) => Some(*a),
            Some(_) => None,
        }
    }

    pub fn dynamics_spec(&self, n: u32) -> Result<DynamicsSpec> {
        Ok(DynamicsSpec {
            n,
            exclusion: self.exclusion()?,
            exchange_multiplier: self.dynamics.exchange_multiplier,
            walker: self.walker()?,
            long_range: self.long_range()?,
            horizon: self.run.horizon,
        })
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.run
            .snapshot_times
            .clone()
            .unwrap_or_else(|| (0..=4).map(|k| self.run.horizon * k as f64 / 4.0).collect())
    }

    /// Defaults to the snapshot times, with the horizon appended if missing.
    pub fn sample_times(&self) -> Vec<f64> {
        self.run.sample_times.clone().unwrap_or_else(|| {
            let mut times = self.snapshot_times();
            if times.last().is_none_or(|&t| t < self.run.horizon) {
                times.push(self.run.horizon);
            }
            times
        })
    }

    pub fn plan(&self) -> ObservationPlan {
        ObservationPlan::standard(self.run.horizon)
            .with_sample_times(self.sample_times())
            .with_snapshots(self.snapshot_times(), self.run.frames.clone())
            .with_epsilons(self.run.epsilons.clone())
            .with_bin_width(self.run.bin_width)
    }

    pub fn window(&self, n: u32) -> Result<Window> {
        Window::symmetric(n, self.run.window_factor).map_err(|e| fail("run.window_factor", e))
    }

    /// Drift bound of the walker ODE.
    pub fn speed_bound(&self) -> f64 {
        self.walker().map(|w| drift_speed_bound(&w.jump_table())).unwrap_or(0.0)
    }

    /// Grid for the limit equations, wide enough for the density window and the walker.
    pub fn grid_params(&self) -> Result<GridParams> {
        let h = &self.hydro;
        let mut params = GridParams::standard()
            .with_resolution(h.dx, h.dt)
            .with_diffusivity(h.diffusivity);
        let profile = self.profile()?;
        let spread = h.diffusivity * (1.0 + 2.0 * self.phi_coefficient().unwrap_or(0.0).max(0.0));
        let width = h.half_width.unwrap_or_else(|| {
            default_half_width(&profile, self.speed_bound(), self.run.horizon, spread) + self.run.density_range + 1.0
        });
        params = params.with_half_width(width);
        params.validate().map_err(|e| fail("hydro", e))?;
        Ok(params)
    }

    /// Checks every precondition of the modules a run touches.
    pub fn validate(&self) -> Result<()> {
        self.profile()?;
        self.walker()?;
        self.exclusion()?;
        self.long_range()?;
        let r = &self.run;
        if r.n_list.is_empty() {
            return Err(fail("run.n_list", "empty"));
        }
        if let Some(k) = r.n_list.iter().position(|&n| n == 0) {
            return Err(fail(format!("run.n_list[{k}]"), "n must be at least 1"));
        }
        if r.replicas == 0 {
            return Err(fail("run.replicas", "need at least one replica"));
        }
        if !(r.horizon > 0.0 && r.horizon.is_finite()) {
            return Err(fail("run.horizon", format!("{} must be positive", r.horizon)));
        }
        for (name, times) in [
            ("run.snapshot_times", self.snapshot_times()),
            ("run.sample_times", self.sample_times()),
        ] {
            if let Some(t) = times.iter().find(|t| !(0.0..=r.horizon).contains(*t)) {
                return Err(fail(name, format!("{t} outside [0, {}]", r.horizon)));
            }
            if times.windows(2).any(|w| w[0] >= w[1]) {
                return Err(fail(name, "times must be strictly increasing"));
            }
        }
        if self
            .sample_times()
            .last()
            .is_none_or(|&t| (t - r.horizon).abs() > 1e-12 * r.horizon.max(1.0))
        {
            return Err(fail(
                "run.sample_times",
                format!("must end at the horizon {}", r.horizon),
            ));
        }
        if !(r.window_factor > 0.0 && r.window_factor.is_finite()) {
            return Err(fail(
                "run.window_factor",
                format!("{} must be positive", r.window_factor),
            ));
        }
        if !(r.density_range > 0.0 && r.density_range <= r.window_factor) {
            return Err(fail(
                "run.density_range",
                format!("{} must lie in (0, window_factor]", r.density_range),
            ));
        }
        if r.frames.is_empty() && !self.snapshot_times().is_empty() {
            return Err(fail("run.frames", "snapshots need at least one frame"));
        }
        if !(self.dynamics.exchange_multiplier >= 0.0 && self.dynamics.exchange_multiplier.is_finite()) {
            return Err(fail("dynamics.exchange_multiplier", "must be finite and non-negative"));
        }
        for &n in &r.n_list {
            let window = self.window(n)?;
            if !(r.bin_width.is_finite() && r.bin_width * n as f64 + 1e-9 >= 1.0) {
                return Err(fail(
                    "run.bin_width",
                    format!("{} is below 1/n for n = {n}", r.bin_width),
                ));
            }
            for (k, &eps) in r.epsilons.iter().enumerate() {
                let block = (eps * n as f64 + 1e-9).floor();
                if !(eps > 0.0) || block < 1.0 {
                    return Err(fail(
                        format!("run.epsilons[{k}]"),
                        format!("εn = {} < 1 for n = {n}", eps * n as f64),
                    ));
                }
                if block as usize + 1 > window.len() / 2 {
                    return Err(fail(
                        format!("run.epsilons[{k}]"),
                        format!("block {block} exceeds the window for n = {n}"),
                    ));
                }
            }
            let spec = self.dynamics_spec(n)?;
            spec.validate().map_err(|e| fail("dynamics", e))?;
            spec.validate_window(window.len(), r.boundary)
                .map_err(|e| fail("run.window_factor", e))?;
        }
        if !(self.hydro.ode_dt > 0.0 && self.hydro.ode_dt < r.horizon) {
            return Err(fail(
                "hydro.ode_dt",
                format!("{} must lie in (0, horizon)", self.hydro.ode_dt),
            ));
        }
        self.grid_params()?;
        let o = &self.oracle;
        if let Some(&l) = o.sizes.iter().find(|&&l| !(2..=12).contains(&l)) {
            return Err(fail("oracle.sizes", format!("ring size {l} outside [2, 12]")));
        }
        if o.n_list.contains(&0) {
            return Err(fail("oracle.n_list", "n must be at least 1"));
        }
        if let Some(rho) = o.densities.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(fail("oracle.densities", format!("{rho} outside [0, 1]")));
        }
        for (k, &(a, b)) in o.rates.iter().enumerate() {
            WalkerRates::new(a, b).map_err(|e| fail(format!("oracle.rates[{k}]"), e))?;
        }
        if o.trials == 0 {
            return Err(fail("oracle.trials", "need at least one trial"));
        }
        Ok(())
    }
}
