use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{Boundary, LatticeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Lab,
    Walker,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::Walker => "walker",
        }
    }
}

/// Binned (1/n)·Σ η(z) δ_{z/n}, in the lab frame or re-centred at the walker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub time: f64,
    pub n: u32,
    pub bin_width: f64,
    pub frame: Frame,
    /// Index of the first bin; bin b covers [b·h, (b+1)·h).
    pub first_bin: i64,
    pub masses: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn bin_lo(&self, k: usize) -> f64 {
        bin_edge(self.first_bin + k as i64, self.bin_width)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mass of the bin starting at index `b`, zero outside the recorded range.
    pub fn mass(&self, b: i64) -> f64 {
        let k = b - self.first_bin;
        if k < 0 || k as usize >= self.masses.len() {
            0.0
        } else {
            self.masses[k as usize]
        }
    }

    /// Mass divided by bin width: an estimate of the density on each bin.
    pub fn densities(&self) -> Vec<f64> {
        self.masses.iter().map(|m| m / self.bin_width).collect()
    }
}

/// b·h, computed as b/(1/h) when 1/h is an integer so that decimal widths give
/// decimal edges.
pub fn bin_edge(b: i64, h: f64) -> f64 {
    let inv = 1.0 / h;
    if (inv - inv.round()).abs() < 1e-9 {
        b as f64 / inv.round()
    } else {
        b as f64 * h
    }
}

/// Maps a lattice offset to its bin, exactly when n·h is an integer.
pub(crate) struct Binner {
    per_bin: Option<i64>,
    scale: f64,
}

impl Binner {
    pub(crate) fn new(n: u32, h: f64) -> Self {
        let k = n as f64 * h;
        let per_bin = ((k - k.round()).abs() < 1e-9 && k.round() >= 1.0).then(|| k.round() as i64);
        Self {
            per_bin,
            scale: 1.0 / k,
        }
    }

    #[inline]
    pub(crate) fn bin(&self, z: i64) -> i64 {
        match self.per_bin {
            Some(k) => z.div_euclid(k),
            None => (z as f64 * self.scale).floor() as i64,
        }
    }
}

/// Bins the occupied sites of `state`.
///
/// In the walker frame the offsets z − x are used; on a ring they are taken in
/// [−⌊L/2⌋, L − ⌊L/2⌋).
pub fn empirical_measure(state: &LatticeState, n: u32, h: f64, frame: Frame, time: f64) -> Result<EmpiricalMeasure> {
    if n == 0 {
        return Err(invalid("n", "scale must be at least 1"));
    }
    if !(h > 0.0 && h.is_finite()) || h * n as f64 + 1e-9 < 1.0 {
        return Err(invalid("bin_width", format!("{h} must be at least 1/n")));
    }
    let binner = Binner::new(n, h);
    let len = state.len() as i64;
    let occ = state.occupancy();
    let offset = |i: usize| -> i64 {
        let site = state.lo() + i as i64;
        match frame {
            Frame::Lab => site,
            Frame::Walker => match state.boundary() {
                Boundary::FrozenProfile => site - state.walker(),
                Boundary::Periodic => {
                    let half = len / 2;
                    (site - state.walker_site() + half).rem_euclid(len) - half
                }
            },
        }
    };
    let (lo, hi) = match frame {
        Frame::Lab => (state.lo(), state.hi()),
        Frame::Walker => match state.boundary() {
            Boundary::FrozenProfile => (state.lo() - state.walker(), state.hi() - state.walker()),
            Boundary::Periodic => (-(len / 2), len - len / 2 - 1),
        },
    };
    let first_bin = binner.bin(lo);
    let last_bin = binner.bin(hi);
    let mut counts = vec![0u64; (last_bin - first_bin + 1) as usize];
    for (i, &b) in occ.iter().enumerate() {
        if b != 0 {
            counts[(binner.bin(offset(i)) - first_bin) as usize] += 1;
        }
    }
    let inv = 1.0 / n as f64;
    Ok(EmpiricalMeasure {
        time,
        n,
        bin_width: h,
        frame,
        first_bin,
        masses: counts.into_iter().map(|c| c as f64 * inv).collect(),
    })
}
