//! Whitespace-separated data files and gnuplot scripts for the standard figures.
//!
//! | data file         | blocks            | columns                                    |
//! |-------------------|-------------------|--------------------------------------------|
//! | `walker.dat`      | one per n         | t, mean x/n, stderr, f(t)                  |
//! | `density.dat`     | one per (n, t)    | bin_lo, bin_mid, density, stderr, û        |
//! | `replacement.dat` | one               | n, epsilon, mean statistic, stderr         |
//! | `ks.dat`          | one               | n, KS statistic, p-value, median gap, agreement |
//!
//! Blocks are separated by two blank lines (gnuplot `index`). Missing values
//! are written as `NaN`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use xwalk_core::observables::Frame;

use crate::error::Result;
use crate::experiment::ConvergenceReport;
use crate::output::write_text;

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => "NaN".into(),
    }
}

/// `plot` line over `labels.len()` blocks, or an empty placeholder.
fn plot_blocks(data: &str, using: &str, style: &str, labels: &[String]) -> String {
    if labels.is_empty() {
        return "plot NaN title 'no data'\n".into();
    }
    let parts: Vec<String> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| format!("'{data}' index {i} using {using} with {style} title '{l}'"))
        .collect();
    format!("plot {}\n", parts.join(", \\\n     "))
}

fn script(name: &str, title: &str, xlabel: &str, ylabel: &str, body: &str) -> String {
    format!(
        "set terminal svg size 800,600\nset output '{name}.svg'\nset title '{title}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\nset key outside\n{body}"
    )
}

/// Writes the data files and scripts into `dir`; returns every path written.
pub fn emit_plots(report: &ConvergenceReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut emit = |file: &str, text: String| -> Result<()> {
        let p = dir.join(file);
        write_text(&p, &text)?;
        written.push(p);
        Ok(())
    };

    let mut walker = String::from("# t mean_x_over_n stderr f\n");
    let mut labels = Vec::new();
    for e in &report.entries {
        writeln!(walker, "# n = {}", e.n).unwrap();
        for p in &e.walker {
            writeln!(walker, "{} {} {} {}", p.t, p.mean, p.stderr, num(p.reference)).unwrap();
        }
        walker.push_str("\n\n");
        labels.push(format!("n = {}", e.n));
    }
    let mut body = plot_blocks("walker.dat", "1:2:3", "yerrorlines", &labels);
    if !labels.is_empty() {
        body = body.trim_end().to_string() + ", \\\n     'walker.dat' index 0 using 1:4 with lines dt 2 title 'f(t)'\n";
    }
    emit("walker.dat", walker)?;
    emit("walker.gp", script("walker", "walker position", "t", "x_t/n", &body))?;

    let mut density = String::from("# bin_lo bin_mid density stderr u_hat\n");
    let mut labels = Vec::new();
    for e in &report.entries {
        for d in e.densities.iter().filter(|d| d.frame == Frame::Walker) {
            writeln!(density, "# n = {}, t = {}", e.n, d.t).unwrap();
            let h = d.bins.get(1).map(|b| b.lo - d.bins[0].lo).unwrap_or(0.0);
            for b in &d.bins {
                writeln!(
                    density,
                    "{} {} {} {} {}",
                    b.lo,
                    b.lo + 0.5 * h,
                    b.density,
                    b.stderr,
                    num(b.reference)
                )
                .unwrap();
            }
            density.push_str("\n\n");
            labels.push(format!("n = {}, t = {}", e.n, d.t));
        }
    }
    let mut body = plot_blocks("density.dat", "2:3:4", "yerrorbars", &labels);
    if !labels.is_empty() {
        let refs: Vec<String> = (0..labels.len())
            .map(|i| format!("'density.dat' index {i} using 2:5 with lines notitle"))
            .collect();
        body = body.trim_end().to_string() + ", \\\n     " + &refs.join(", \\\n     ") + "\n";
    }
    emit("density.dat", density)?;
    emit(
        "density.gp",
        script("density", "walker-frame density", "x", "density", &body),
    )?;

    let mut repl = String::from("# n epsilon mean_stat stderr\n");
    let mut any = false;
    for e in &report.entries {
        for r in &e.replacement {
            writeln!(repl, "{} {} {} {}", e.n, r.epsilon, r.mean, r.stderr).unwrap();
            any = true;
        }
    }
    let body = if any {
        "set logscale xy\nset palette rgbformulae 33,13,10\nplot 'replacement.dat' using 1:2:3 with points pt 5 ps 4 palette notitle\n"
            .to_string()
    } else {
        "plot NaN title 'no data'\n".to_string()
    };
    emit("replacement.dat", repl)?;
    emit(
        "replacement.gp",
        script("replacement", "replacement statistic", "n", "epsilon", &body),
    )?;

    let mut ks = String::from("# n ks_statistic p_value median_gap agreement\n");
    for m in &report.macro_jumps {
        writeln!(
            ks,
            "{} {} {} {} {}",
            m.n,
            num(m.ks.map(|k| k.statistic)),
            num(m.ks.map(|k| k.p_value)),
            num(Some(m.median_gap)),
            num(Some(m.agreement))
        )
        .unwrap();
    }
    let body = if report.macro_jumps.is_empty() {
        "plot NaN title 'no data'\n".to_string()
    } else {
        "set logscale x\nplot 'ks.dat' using 1:2 with linespoints title 'KS', 'ks.dat' using 1:4 with linespoints title 'median gap'\n"
            .to_string()
    };
    emit("ks.dat", ks)?;
    emit("ks.gp", script("ks", "first macroscopic jump", "n", "statistic", &body))?;
    Ok(written)
}
