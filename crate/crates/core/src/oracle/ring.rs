use nalgebra::{DVector, RealField};

use crate::error::{invalid, Result};
use crate::lattice::LatticeState;

/// Configurations {0,1}^L of a ring of L sites, encoded as bit masks with bit k
/// holding ξ(k).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingSpace {
    size: usize,
}

impl RingSpace {
    pub const MIN_SIZE: usize = 2;
    pub const MAX_SIZE: usize = 12;

    pub fn new(size: usize) -> Result<Self> {
        if !(Self::MIN_SIZE..=Self::MAX_SIZE).contains(&size) {
            return Err(invalid(
                "L",
                format!("ring size {size} outside [{}, {}]", Self::MIN_SIZE, Self::MAX_SIZE),
            ));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn states(&self) -> usize {
        1 << self.size
    }

    fn mask(&self) -> usize {
        self.states() - 1
    }

    fn wrap(&self, k: i64) -> usize {
        k.rem_euclid(self.size as i64) as usize
    }

    /// ξ(k) with k taken modulo L.
    #[inline]
    pub fn site(&self, s: usize, k: i64) -> u8 {
        ((s >> self.wrap(k)) & 1) as u8
    }

    /// θ^y ξ, the configuration seen after the walker moves by y.
    pub fn shift(&self, s: usize, y: i64) -> usize {
        let r = self.wrap(y);
        if r == 0 {
            return s;
        }
        ((s >> r) | (s << (self.size - r))) & self.mask()
    }

    /// Exchange of the occupations at z and z + 1 (mod L).
    pub fn exchange(&self, s: usize, z: usize) -> usize {
        let a = z % self.size;
        let b = (z + 1) % self.size;
        if ((s >> a) ^ (s >> b)) & 1 == 0 {
            s
        } else {
            s ^ (1 << a) ^ (1 << b)
        }
    }

    /// Pattern of a local function of the given radius centered at `center`.
    pub fn pattern(&self, s: usize, center: i64, radius: u32) -> usize {
        let r = radius as i64;
        let mut p = 0;
        for k in -r..=r {
            p |= (self.site(s, center + k) as usize) << (k + r);
        }
        p
    }

    pub fn particles(&self, s: usize) -> u32 {
        s.count_ones()
    }

    pub fn encode(&self, occ: &[u8]) -> Result<usize> {
        if occ.len() != self.size {
            return Err(invalid(
                "occupancy",
                format!("{} sites on a ring of {}", occ.len(), self.size),
            ));
        }
        Ok(occ
            .iter()
            .enumerate()
            .fold(0, |s, (k, &v)| s | (((v & 1) as usize) << k)))
    }

    pub fn decode(&self, s: usize) -> Vec<u8> {
        (0..self.size).map(|k| ((s >> k) & 1) as u8).collect()
    }

    /// Environment seen from the walker of a periodic lattice state of L sites.
    pub fn encode_view(&self, state: &LatticeState) -> Result<usize> {
        if state.len() != self.size {
            return Err(invalid(
                "state",
                format!("{} sites on a ring of {}", state.len(), self.size),
            ));
        }
        let x = state.walker();
        Ok((0..self.size).fold(0, |s, k| s | ((state.get(x + k as i64) as usize) << k)))
    }

    /// Bernoulli product measure ν_ρ as a vector over states.
    pub fn product_measure<T: RealField + Copy>(&self, rho: T) -> DVector<T> {
        let q = T::one() - rho;
        DVector::from_fn(self.states(), |s, _| {
            let k = self.particles(s) as i32;
            rho.powi(k) * q.powi(self.size as i32 - k)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_reads_relative_sites() {
        let ring = RingSpace::new(5).unwrap();
        let s = ring.encode(&[1, 0, 0, 1, 1]).unwrap();
        let t = ring.shift(s, 1);
        for k in 0..5 {
            assert_eq!(ring.site(t, k), ring.site(s, k + 1));
        }
        assert_eq!(ring.shift(ring.shift(s, 2), -2), s);
        assert_eq!(ring.shift(s, 5), s);
    }

    #[test]
    fn maps_are_bijections() {
        for size in [2, 4, 7] {
            let ring = RingSpace::new(size).unwrap();
            let mut seen = vec![false; ring.states()];
            for s in 0..ring.states() {
                seen[ring.shift(s, 3)] = true;
            }
            assert!(seen.iter().all(|&b| b));
            for z in 0..size {
                for s in 0..ring.states() {
                    assert_eq!(ring.exchange(ring.exchange(s, z), z), s);
                    assert_eq!(ring.particles(ring.exchange(s, z)), ring.particles(s));
                }
            }
        }
    }

    #[test]
    fn product_measure_is_normalized() {
        let ring = RingSpace::new(6).unwrap();
        let nu = ring.product_measure(0.3f64);
        assert!((nu.sum() - 1.0).abs() < 1e-14);
        assert!(RingSpace::new(1).is_err());
        assert!(RingSpace::new(13).is_err());
    }
}
