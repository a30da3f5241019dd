//! Exact ring sweeps and solver self-checks that do not need lattice replicas.

use serde::Serialize;
use xwalk_core::hydro::{solve_heat, solve_shifted_pde, solve_walker_ode, HeatSolution};
use xwalk_core::kmc::DynamicsSpec;
use xwalk_core::lattice::{Profile, WalkerRates};
use xwalk_core::oracle::{
    check_dirichlet_bound, invariance_residual, noninvariance_witness, reversibility_residual, GeneratorMatrix,
    RingSpace,
};
use xwalk_core::rng::path_rng;
use xwalk_core::GridParams;

use crate::config::OracleConfig;
use crate::error::{Context, Result};
use crate::output::DirichletRun;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessRow {
    pub size: usize,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct OracleSweep {
    pub runs: Vec<DirichletRun>,
    /// Trials whose left side exceeds the bound by more than the tolerance.
    pub violations: usize,
    pub max_violation: f64,
    /// Largest |D(f) − ⟨√f, −G_ex√f⟩| over all trials.
    pub identity_error: f64,
    /// max ‖ν_ρ G_ex‖₁ over ring sizes and densities.
    pub max_invariance: f64,
    /// max reversibility residual of G_ex.
    pub max_reversibility: f64,
    pub witnesses: Vec<WitnessRow>,
}

/// Dirichlet bound, invariance, reversibility and walker non-invariance over
/// every (L, n, ρ, α, β) in the sweep.
pub fn run_oracle_sweep(cfg: &OracleConfig, seed: u64) -> Result<OracleSweep> {
    let mut sweep = OracleSweep {
        runs: Vec::new(),
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        identity_error: 0.0,
        max_invariance: 0.0,
        max_reversibility: 0.0,
        witnesses: Vec::new(),
    };
    for (li, &size) in cfg.sizes.iter().enumerate() {
        let ring = RingSpace::new(size).context("oracle ring")?;
        let exchange = GeneratorMatrix::<f64>::nearest_neighbor(ring, 1, WalkerRates::new(1.0, 1.0).expect("valid"))
            .context("oracle generator")?;
        for (ri, &rho) in cfg.densities.iter().enumerate() {
            let nu = ring.product_measure(rho);
            sweep.max_invariance = sweep
                .max_invariance
                .max(invariance_residual(exchange.exchange_part(), &nu));
            let mut rng = path_rng(seed, &[0, li as u64, ri as u64]);
            sweep.max_reversibility =
                sweep
                    .max_reversibility
                    .max(reversibility_residual(exchange.exchange_part(), &nu, 100, &mut rng));
            for &(alpha, beta) in &cfg.rates {
                let rates = WalkerRates::new(alpha, beta).context("oracle rates")?;
                let spec = DynamicsSpec::nearest_neighbor(1, rates, 1.0);
                sweep.witnesses.push(WitnessRow {
                    size,
                    rho,
                    alpha,
                    beta,
                    value: noninvariance_witness(ring, &spec, rho).context("witness")?,
                });
            }
        }
        for (ni, &n) in cfg.n_list.iter().enumerate() {
            for (ri, &rho) in cfg.densities.iter().enumerate() {
                for (ki, &(alpha, beta)) in cfg.rates.iter().enumerate() {
                    let rates = WalkerRates::new(alpha, beta).context("oracle rates")?;
                    let spec = DynamicsSpec::nearest_neighbor(n, rates, 1.0);
                    let mut rng = path_rng(seed, &[1, li as u64, ni as u64, ri as u64, ki as u64]);
                    let report = check_dirichlet_bound(ring, &spec, rho, cfg.trials, cfg.tolerance, &mut rng)
                        .context(format!("Dirichlet bound, L = {size}, n = {n}, rho = {rho}"))?;
                    sweep.violations += report.violations;
                    sweep.max_violation = sweep.max_violation.max(report.max_violation);
                    sweep.identity_error = sweep.identity_error.max(report.identity_error);
                    sweep.runs.push(DirichletRun { alpha, beta, report });
                }
            }
        }
    }
    Ok(sweep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverQuality {
    /// Max-norm errors of the heat solver against the closed form at T, per refinement.
    pub heat_errors: Vec<f64>,
    pub heat_orders: Vec<f64>,
    /// Max over grid and time levels of |û_num(t, x) − u_num(t, x + f(t))|.
    pub shifted_agreement: f64,
    /// |shift(T) − f(T)|.
    pub shift_error: f64,
}

/// Refinement study of the heat solver on a step, and agreement of the
/// walker-frame solver with the lab-frame solution read along the ODE path.
pub fn solver_quality(profile: &Profile, rates: &WalkerRates, horizon: f64) -> Result<SolverQuality> {
    let exact = HeatSolution::new(profile, 1.0).context("closed-form heat")?;
    let base = GridParams::standard().with_resolution(0.04, 1e-3).with_half_width(6.0);
    let mut heat_errors = Vec::new();
    for f in [1, 2, 4] {
        let g = solve_heat(profile, horizon, &base.refined(f)).context("heat refinement")?;
        let t = g.final_time();
        heat_errors.push(
            (0..g.nx)
                .map(|i| (g.last()[i] - exact.eval(t, g.x(i))).abs())
                .fold(0.0, f64::max),
        );
    }
    let heat_orders = heat_errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();

    let params = GridParams::standard();
    let shifted = solve_shifted_pde(profile, rates, horizon, &params).context("walker-frame solver")?;
    let heat = solve_heat(profile, horizon, &params.with_half_width(8.0)).context("lab-frame solver")?;
    let path = solve_walker_ode(&heat, rates, horizon, 1e-4).context("walker ODE")?;
    let mut worst = 0.0f64;
    for (k, &t) in shifted.grid.times.iter().enumerate() {
        let ft = path.at(t);
        for i in 0..shifted.grid.nx {
            let u = heat.at_level(k, shifted.grid.x(i) + ft).context("lab-frame lookup")?;
            worst = worst.max((shifted.grid.values[k][i] - u).abs());
        }
    }
    let shift_error = (shifted.shift.last().copied().unwrap_or(0.0) - path.at(horizon)).abs();
    Ok(SolverQuality {
        heat_errors,
        heat_orders,
        shifted_agreement: worst,
        shift_error,
    })
}
