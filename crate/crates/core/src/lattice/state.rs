use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, XwalkError};
use crate::lattice::profile::Profile;

/// Width of the frozen halo kept on each side of a window with
/// [`Boundary::FrozenProfile`]; local functions read at most this far out.
pub const HALO: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// The window is a ring; the walker position is tracked without wrapping.
    #[default]
    Periodic,
    /// Sites outside the window keep their initial values and bonds leaving
    /// the window are closed. The walker must stay inside the window.
    FrozenProfile,
}

/// Integer window [lo, hi] in lattice units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: i64,
    pub hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(XwalkError::InvalidWindow(format!("empty window [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// [−W, W] with W = ⌈K·n⌉.
    pub fn symmetric(n: u32, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) || n == 0 {
            return Err(XwalkError::InvalidWindow(format!(
                "window factor {factor} and scale {n} must be positive"
            )));
        }
        let w = (factor * n as f64).ceil() as i64;
        Self::new(-w, w)
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, z: i64) -> bool {
        self.lo <= z && z <= self.hi
    }
}

/// Occupations on a window plus the walker position.
///
/// `walker` is the unwrapped position: under periodic boundary it may leave
/// the window and [`LatticeState::walker_site`] gives the site it occupies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeState {
    lo: i64,
    occ: Vec<u8>,
    walker: i64,
    boundary: Boundary,
    halo_left: Vec<u8>,
    halo_right: Vec<u8>,
}

impl LatticeState {
    /// Periodic state; halos are not used.
    pub fn periodic(lo: i64, occ: Vec<u8>, walker: i64) -> Result<Self> {
        Self::new(lo, occ, walker, Boundary::Periodic, Vec::new(), Vec::new())
    }

    pub fn new(
        lo: i64,
        occ: Vec<u8>,
        walker: i64,
        boundary: Boundary,
        halo_left: Vec<u8>,
        halo_right: Vec<u8>,
    ) -> Result<Self> {
        if occ.is_empty() {
            return Err(XwalkError::InvalidWindow("empty occupancy".into()));
        }
        if occ.iter().chain(&halo_left).chain(&halo_right).any(|&b| b > 1) {
            return Err(XwalkError::InvalidWindow("occupations must be 0 or 1".into()));
        }
        let hi = lo + occ.len() as i64 - 1;
        match boundary {
            Boundary::Periodic => {
                if occ.len() < 4 {
                    return Err(XwalkError::InvalidWindow(format!(
                        "periodic window needs at least 4 sites, got {}",
                        occ.len()
                    )));
                }
            }
            Boundary::FrozenProfile => {
                if halo_left.len() != HALO || halo_right.len() != HALO {
                    return Err(XwalkError::InvalidWindow(format!(
                        "frozen boundary needs halos of {HALO} sites"
                    )));
                }
                if walker < lo || walker > hi {
                    return Err(XwalkError::InvalidWindow(format!(
                        "walker {walker} outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(Self {
            lo,
            occ,
            walker,
            boundary,
            halo_left,
            halo_right,
        })
    }

    #[inline]
    pub fn lo(&self) -> i64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> i64 {
        self.lo + self.occ.len() as i64 - 1
    }

    #[inline]
    pub fn window(&self) -> Window {
        Window {
            lo: self.lo,
            hi: self.hi(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.occ.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    #[inline]
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    #[inline]
    pub fn occupancy(&self) -> &[u8] {
        &self.occ
    }

    #[inline]
    pub fn occupancy_mut(&mut self) -> &mut [u8] {
        &mut self.occ
    }

    pub fn halos(&self) -> (&[u8], &[u8]) {
        (&self.halo_left, &self.halo_right)
    }

    #[inline]
    pub fn walker(&self) -> i64 {
        self.walker
    }

    pub(crate) fn set_walker(&mut self, x: i64) {
        self.walker = x;
    }

    /// Index into [`occupancy`](Self::occupancy) of site `z`, wrapping under
    /// periodic boundary; `None` outside a frozen window.
    #[inline]
    pub fn index_of(&self, z: i64) -> Option<usize> {
        let off = z - self.lo;
        match self.boundary {
            Boundary::Periodic => Some(off.rem_euclid(self.occ.len() as i64) as usize),
            Boundary::FrozenProfile => (0..self.occ.len() as i64).contains(&off).then_some(off as usize),
        }
    }

    /// Site of the window currently holding the walker.
    #[inline]
    pub fn walker_site(&self) -> i64 {
        self.lo + self.index_of(self.walker).unwrap_or(0) as i64
    }

    /// η(z). Frozen windows read halo values just outside and panic beyond them.
    pub fn get(&self, z: i64) -> u8 {
        if let Some(i) = self.index_of(z) {
            return self.occ[i];
        }
        let h = HALO as i64;
        if z < self.lo && z >= self.lo - h {
            self.halo_left[(z - (self.lo - h)) as usize]
        } else if z > self.hi() && z <= self.hi() + h {
            self.halo_right[(z - self.hi() - 1) as usize]
        } else {
            panic!("site {z} outside window and halo")
        }
    }

    /// Sets η(z) for a site of the window.
    pub fn set(&mut self, z: i64, v: u8) -> Result<()> {
        let i = self
            .index_of(z)
            .ok_or_else(|| XwalkError::InvalidWindow(format!("site {z} outside window")))?;
        self.occ[i] = v & 1;
        Ok(())
    }

    pub fn particle_count(&self) -> usize {
        self.occ.iter().map(|&b| b as usize).sum()
    }

    /// Number of exchange bonds: L on a ring, L − 1 on a frozen window.
    pub fn bond_count(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.occ.len(),
            Boundary::FrozenProfile => self.occ.len() - 1,
        }
    }
}

/// Samples η(z) ~ Bernoulli(u₀(z/n)) independently on the window, walker at 0.
///
/// Under frozen boundary the halo sites are sampled from the same profile.
pub fn sample_initial<R: Rng + ?Sized>(
    profile: &Profile,
    n: u32,
    window: Window,
    boundary: Boundary,
    rng: &mut R,
) -> Result<LatticeState> {
    if n == 0 {
        return Err(XwalkError::InvalidParameter {
            name: "n",
            reason: "scale must be at least 1".into(),
        });
    }
    if window.hi < window.lo {
        return Err(XwalkError::InvalidWindow(format!(
            "empty window [{}, {}]",
            window.lo, window.hi
        )));
    }
    if !window.contains(0) {
        return Err(XwalkError::InvalidWindow(format!(
            "window [{}, {}] does not contain the origin",
            window.lo, window.hi
        )));
    }
    let scale = n as f64;
    let mut draw = |z: i64| -> u8 {
        let p = profile.eval(z as f64 / scale);
        (rng.random::<f64>() < p) as u8
    };
    let h = HALO as i64;
    let (halo_left, occ, halo_right) = match boundary {
        Boundary::Periodic => (Vec::new(), (window.lo..=window.hi).map(&mut draw).collect(), Vec::new()),
        Boundary::FrozenProfile => {
            let left = (window.lo - h..window.lo).map(&mut draw).collect();
            let occ = (window.lo..=window.hi).map(&mut draw).collect();
            let right = (window.hi + 1..=window.hi + h).map(&mut draw).collect();
            (left, occ, right)
        }
    };
    LatticeState::new(window.lo, occ, 0, boundary, halo_left, halo_right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn window_must_contain_origin() {
        let p = Profile::constant(0.5).unwrap();
        let mut rng = stream_rng(1, 0);
        let w = Window::new(1, 10).unwrap();
        assert!(matches!(
            sample_initial(&p, 10, w, Boundary::Periodic, &mut rng),
            Err(XwalkError::InvalidWindow(_))
        ));
        let tiny = Window::new(-1, 1).unwrap();
        assert!(sample_initial(&p, 10, tiny, Boundary::Periodic, &mut rng).is_err());
        assert!(sample_initial(&p, 10, tiny, Boundary::FrozenProfile, &mut rng).is_ok());
    }

    #[test]
    fn degenerate_profiles() {
        let mut rng = stream_rng(2, 0);
        let w = Window::symmetric(20, 2.0).unwrap();
        let empty = sample_initial(&Profile::constant(0.0).unwrap(), 20, w, Boundary::Periodic, &mut rng).unwrap();
        assert_eq!(empty.particle_count(), 0);
        let full = sample_initial(&Profile::constant(1.0).unwrap(), 20, w, Boundary::Periodic, &mut rng).unwrap();
        assert_eq!(full.particle_count(), w.len());
        assert_eq!(full.walker(), 0);
    }

    #[test]
    fn periodic_indexing_wraps() {
        let s = LatticeState::periodic(-2, vec![1, 0, 0, 1, 0], 0).unwrap();
        assert_eq!(s.get(3), s.get(-2));
        assert_eq!(s.get(-3), s.get(2));
        assert_eq!(s.bond_count(), 5);
    }

    #[test]
    fn frozen_reads_halo() {
        let s = LatticeState::new(0, vec![0; 6], 2, Boundary::FrozenProfile, vec![1; HALO], vec![1; HALO]).unwrap();
        assert_eq!(s.get(-1), 1);
        assert_eq!(s.get(6), 1);
        assert_eq!(s.get(5), 0);
        assert_eq!(s.bond_count(), 5);
    }
}
