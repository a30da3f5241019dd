use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xwalk_cli::acceptance::{run_all, AcceptanceOptions};
use xwalk_cli::config::ExperimentConfig;
use xwalk_cli::error::Result;
use xwalk_cli::experiment::{aggregate, run_macro, simulate_replicas, LimitObjects};
use xwalk_cli::output::{write_dirichlet, write_experiment, write_json, write_macro, write_text};
use xwalk_cli::plots::emit_plots;
use xwalk_cli::sweeps::{run_oracle_sweep, solver_quality};
use xwalk_cli::ConvergenceReport;

#[derive(Parser, Debug)]
#[command(
    name = "xwalk",
    version,
    about = "Random walk in an exclusion environment: simulations and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides run.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides run.threads (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides output.dir and XWALK_OUT
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. --set run.replicas=50
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replica sweep over n: trajectories, densities, replacement statistics
    Simulate(Common),
    /// Solve the limit equations for the configured profile
    Hydro(Common),
    /// Exact checks on small rings (Dirichlet bound, invariance)
    Oracle(Common),
    /// Coupled first macroscopic jumps
    Macro(Common),
    /// Run the acceptance suite
    Accept {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.seed {
            overrides.push(format!("run.seed={s}"));
        }
        if let Some(t) = self.threads {
            overrides.push(format!("run.threads={t}"));
        }
        let cfg = ExperimentConfig::load(&self.config, &overrides)?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output.dir.clone())
            .or_else(|| std::env::var_os("XWALK_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("xwalk-out"));
        Ok((cfg, out))
    }
}

fn simulate(common: &Common) -> Result<()> {
    let (cfg, out) = common.load()?;
    write_text(&out.join("config.toml"), &cfg.to_toml())?;
    let limits = LimitObjects::solve(&cfg)?;
    let (runs, runtimes, error) = simulate_replicas(&cfg);
    if let Some(e) = error {
        // flush what completed before the failure
        write_experiment(&out, &runs, &ConvergenceReport::default())?;
        return Err(e);
    }
    let report = aggregate(&cfg, &limits, &runs, &runtimes)?;
    write_experiment(&out, &runs, &report)?;
    write_json(&out.join("report.json"), &report)?;
    emit_plots(&report, &out)?;
    print_report(&report);
    println!("wrote {}", out.display());
    Ok(())
}

fn print_report(report: &ConvergenceReport) {
    for e in &report.entries {
        print!(
            "n = {:>5}  R = {:>5}  x_T/n = {:+.5} ± {:.5}",
            e.n, e.replicas, e.final_position.mean, e.final_position.stderr
        );
        if let Some(f) = e.reference_final {
            print!("  f(T) = {f:+.5}");
        }
        if let Some(w) = e.walker_error {
            print!("  sup|x/n - f| = {:.5} ± {:.5}", w.sup, w.stderr);
        }
        for frame in [
            xwalk_core::observables::Frame::Lab,
            xwalk_core::observables::Frame::Walker,
        ] {
            if let Some((err, mc)) = e.density_error_sup(frame) {
                print!("  {} density err = {err:.4} ± {mc:.4}", frame.as_str());
            }
        }
        if let Some(m) = e.martingale {
            print!("  Var(M)/QV = {:.3} ± {:.3}", m.ratio, m.ratio_stderr);
        }
        println!("  [{:.1} s]", e.runtime_secs);
        for r in &e.replacement {
            println!(
                "    eps = {:<6} replacement = {:.5} ± {:.5}",
                r.epsilon, r.mean, r.stderr
            );
        }
    }
}

fn hydro(common: &Common) -> Result<()> {
    let (cfg, out) = common.load()?;
    let limits = LimitObjects::solve(&cfg)?;
    let range = cfg.run.density_range;
    let step = cfg.run.bin_width / 10.0;
    let count = (2.0 * range / step).round() as usize;
    let mut profile = String::from("t,x,u,u_hat\n");
    for &t in &cfg.snapshot_times() {
        for i in 0..=count {
            let x = -range + i as f64 * step;
            let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            profile.push_str(&format!(
                "{t},{x},{},{}\n",
                cell(limits.u(t, x)),
                cell(limits.u_hat(t, x))
            ));
        }
    }
    write_text(&out.join("limit_profile.csv"), &profile)?;
    if let Some(path) = &limits.path {
        let mut text = String::from("t,f\n");
        for (t, f) in path.times.iter().zip(&path.f) {
            text.push_str(&format!("{t},{f}\n"));
        }
        write_text(&out.join("walker_limit.csv"), &text)?;
        println!(
            "f(T) = {:+.6}  (ODE residual {:.1e})",
            path.at(cfg.run.horizon),
            path.residual
        );
    }
    if let (Some(rates), Ok(p)) = (cfg.rates(), cfg.profile()) {
        if let Ok(q) = solver_quality(&p, &rates, cfg.run.horizon) {
            println!(
                "heat refinement orders {:?}; walker-frame vs shifted lab-frame {:.2e}",
                q.heat_orders, q.shifted_agreement
            );
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn oracle(common: &Common) -> Result<()> {
    let (cfg, out) = common.load()?;
    let sweep = run_oracle_sweep(&cfg.oracle, cfg.run.seed)?;
    write_dirichlet(&out.join("oracle_dirichlet.csv"), &sweep.runs)?;
    write_json(&out.join("oracle_witness.json"), &sweep.witnesses)?;
    println!(
        "Dirichlet bound: {} violations, max excess {:.3e}, identity error {:.1e}",
        sweep.violations, sweep.max_violation, sweep.identity_error
    );
    println!(
        "exclusion part: max invariance residual {:.1e}, max symmetry residual {:.1e}",
        sweep.max_invariance, sweep.max_reversibility
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn macro_jumps(common: &Common) -> Result<()> {
    let (cfg, out) = common.load()?;
    let (rows, entries) = run_macro(&cfg)?;
    write_macro(&out.join("macro.csv"), &rows)?;
    let report = ConvergenceReport {
        horizon: cfg.run.horizon,
        entries: Vec::new(),
        macro_jumps: entries,
    };
    write_json(&out.join("report.json"), &report)?;
    emit_plots(&report, &out)?;
    for e in &report.macro_jumps {
        print!(
            "n = {:>5}  pairs = {}  jumped = {}  median gap = {:.4}  agreement = {:.3}",
            e.n, e.pairs, e.jumped, e.median_gap, e.agreement
        );
        if let Some(k) = e.ks {
            print!("  KS = {:.4} (p = {:.3})", k.statistic, k.p_value);
        }
        println!();
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn accept(seed: u64, threads: usize) -> bool {
    let results = run_all(AcceptanceOptions { threads, seed }, |r| println!("{r}"));
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    failed == 0
}

fn dispatch(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Simulate(c) => simulate(c).map(|_| true),
        Command::Hydro(c) => hydro(c).map(|_| true),
        Command::Oracle(c) => oracle(c).map(|_| true),
        Command::Macro(c) => macro_jumps(c).map(|_| true),
        Command::Accept { seed, threads } => Ok(accept(*seed, *threads)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
