//! CSV files with fixed headers. Floats use the shortest round-trip form, so
//! identical runs give identical bytes.

use std::path::{Path, PathBuf};

use xwalk_core::oracle::DirichletReport;

use crate::error::{io_error, Result};
use crate::experiment::{ConvergenceReport, MacroRow, ReplicaRun};

pub const TRAJECTORY_HEADER: [&str; 6] = ["n", "replica", "t", "x_over_n", "A", "Mtilde"];
pub const DENSITY_HEADER: [&str; 6] = ["n", "replica", "t", "bin_lo", "mass", "frame"];
pub const REPLACEMENT_HEADER: [&str; 4] = ["n", "epsilon", "mean_stat", "stderr"];
pub const DIRICHLET_HEADER: [&str; 8] = ["L", "n", "rho", "alpha", "beta", "trial", "lhs", "rhs"];
pub const MACRO_HEADER: [&str; 7] = ["replica", "n", "tau_n", "z_n", "tau", "z", "censored"];

/// One Dirichlet sweep entry with the rates it was run at.
#[derive(Debug, Clone)]
pub struct DirichletRun {
    pub alpha: f64,
    pub beta: f64,
    pub report: DirichletReport,
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| io_error(path, e))
}

fn write_rows<const K: usize>(
    path: &Path,
    header: [&str; K],
    rows: impl IntoIterator<Item = [String; K]>,
) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trajectory(path: &Path, runs: &[ReplicaRun]) -> Result<()> {
    write_rows(
        path,
        TRAJECTORY_HEADER,
        runs.iter().flat_map(|run| {
            let r = &run.record;
            (0..r.times.len()).map(move |i| {
                [
                    run.n.to_string(),
                    run.replica.to_string(),
                    r.times[i].to_string(),
                    r.x_over_n[i].to_string(),
                    r.additive[i].to_string(),
                    opt(r.mtilde.as_ref().map(|m| m[i])),
                ]
            })
        }),
    )
}

pub fn write_density(path: &Path, runs: &[ReplicaRun]) -> Result<()> {
    write_rows(
        path,
        DENSITY_HEADER,
        runs.iter().flat_map(|run| {
            run.record.snapshots.iter().flat_map(move |m| {
                (0..m.masses.len()).map(move |k| {
                    [
                        run.n.to_string(),
                        run.replica.to_string(),
                        m.time.to_string(),
                        m.bin_lo(k).to_string(),
                        m.masses[k].to_string(),
                        m.frame.as_str().to_string(),
                    ]
                })
            })
        }),
    )
}

pub fn write_replacement(path: &Path, report: &ConvergenceReport) -> Result<()> {
    write_rows(
        path,
        REPLACEMENT_HEADER,
        report.entries.iter().flat_map(|e| {
            e.replacement.iter().map(move |r| {
                [
                    e.n.to_string(),
                    r.epsilon.to_string(),
                    r.mean.to_string(),
                    r.stderr.to_string(),
                ]
            })
        }),
    )
}

pub fn write_dirichlet(path: &Path, runs: &[DirichletRun]) -> Result<()> {
    write_rows(
        path,
        DIRICHLET_HEADER,
        runs.iter().flat_map(|run| {
            let r = &run.report;
            r.trials.iter().map(move |t| {
                [
                    r.size.to_string(),
                    r.n.to_string(),
                    r.rho.to_string(),
                    run.alpha.to_string(),
                    run.beta.to_string(),
                    t.trial.to_string(),
                    t.lhs.to_string(),
                    t.rhs.to_string(),
                ]
            })
        }),
    )
}

pub fn write_macro(path: &Path, rows: &[MacroRow]) -> Result<()> {
    write_rows(
        path,
        MACRO_HEADER,
        rows.iter().map(|r| {
            [
                r.replica.to_string(),
                r.n.to_string(),
                opt(r.tau_n),
                opt(r.z_n),
                opt(r.tau),
                opt(r.z),
                u8::from(r.censored).to_string(),
            ]
        }),
    )
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Writes trajectory, density and replacement tables; returns the paths.
pub fn write_experiment(dir: &Path, runs: &[ReplicaRun], report: &ConvergenceReport) -> Result<Vec<PathBuf>> {
    let files = [
        dir.join("trajectory.csv"),
        dir.join("density.csv"),
        dir.join("replacement.csv"),
    ];
    write_trajectory(&files[0], runs)?;
    write_density(&files[1], runs)?;
    write_replacement(&files[2], report)?;
    Ok(files.to_vec())
}
