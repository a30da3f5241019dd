use nalgebra::{convert, DMatrix, DVector, RealField};

use crate::error::{invalid, Result};
use crate::kmc::{DynamicsSpec, Exclusion};
use crate::lattice::WalkerRates;

use super::ring::RingSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    Exchange { bond: usize },
    Walk { step: i64 },
    MacroJump { z: i64 },
}

/// One clock of the environment process: `from → to` at `rate`, with all
/// factors of n already applied. Clocks that leave the state unchanged are kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub from: usize,
    pub to: usize,
    pub rate: T,
    pub kind: TransitionKind,
}

/// Generator of the environment seen from the walker on a ring,
/// G = n²·G_ex + n·G_rw + G_lr.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix<T: RealField> {
    ring: RingSpace,
    n: T,
    exchange: DMatrix<T>,
    walk: DMatrix<T>,
    long_range: DMatrix<T>,
    transitions: Vec<Transition<T>>,
}

fn add_rate<T: RealField + Copy>(m: &mut DMatrix<T>, from: usize, to: usize, rate: T) {
    if from != to {
        m[(from, to)] += rate;
        m[(from, from)] -= rate;
    }
}

impl<T: RealField + Copy> GeneratorMatrix<T> {
    pub fn build(ring: RingSpace, spec: &DynamicsSpec) -> Result<Self> {
        spec.validate()?;
        let r = spec.radius() as usize;
        if ring.size() < 2 * r + 2 {
            return Err(invalid(
                "L",
                format!(
                    "ring of {} sites cannot host local functions of radius {r}",
                    ring.size()
                ),
            ));
        }
        let size = ring.states();
        let n: T = convert(spec.n as f64);
        let mut exchange = DMatrix::zeros(size, size);
        let mut walk = DMatrix::zeros(size, size);
        let mut long_range = DMatrix::zeros(size, size);
        let mut transitions = Vec::new();
        let jumps = spec.walker.jump_table();
        let mult = spec.exchange_multiplier;
        for s in 0..size {
            for z in 0..ring.size() {
                let c = match &spec.exclusion {
                    Exclusion::Simple => 1.0,
                    Exclusion::SpeedChange { rate } => rate.eval(ring.pattern(s, z as i64, rate.radius())),
                };
                let c: T = convert(c * mult);
                let to = ring.exchange(s, z);
                add_rate(&mut exchange, s, to, c);
                transitions.push(Transition {
                    from: s,
                    to,
                    rate: n * n * c,
                    kind: TransitionKind::Exchange { bond: z },
                });
            }
            for (y, g) in &jumps {
                let rate: T = convert(g.eval(ring.pattern(s, 0, g.radius())));
                let to = ring.shift(s, *y);
                add_rate(&mut walk, s, to, rate);
                transitions.push(Transition {
                    from: s,
                    to,
                    rate: n * rate,
                    kind: TransitionKind::Walk { step: *y },
                });
            }
            for (z, g) in &spec.long_range {
                let rate: T = convert(g.eval(ring.pattern(s, 0, g.radius())));
                let to = ring.shift(s, *z * spec.n as i64);
                add_rate(&mut long_range, s, to, rate);
                transitions.push(Transition {
                    from: s,
                    to,
                    rate,
                    kind: TransitionKind::MacroJump { z: *z },
                });
            }
        }
        Ok(Self {
            ring,
            n,
            exchange,
            walk,
            long_range,
            transitions,
        })
    }

    /// Base model: simple exclusion and a nearest-neighbour walker.
    pub fn nearest_neighbor(ring: RingSpace, n: u32, rates: WalkerRates) -> Result<Self> {
        Self::build(ring, &DynamicsSpec::nearest_neighbor(n, rates, 1.0))
    }

    pub fn ring(&self) -> RingSpace {
        self.ring
    }

    pub fn scale(&self) -> T {
        self.n
    }

    /// G_ex without the n² factor.
    pub fn exchange_part(&self) -> &DMatrix<T> {
        &self.exchange
    }

    /// G_rw without the n factor.
    pub fn walk_part(&self) -> &DMatrix<T> {
        &self.walk
    }

    pub fn long_range_part(&self) -> &DMatrix<T> {
        &self.long_range
    }

    pub fn transitions(&self) -> &[Transition<T>] {
        &self.transitions
    }

    pub fn full(&self) -> DMatrix<T> {
        &self.exchange * (self.n * self.n) + &self.walk * self.n + &self.long_range
    }

    /// Largest |row sum| and the most negative off-diagonal entry (0 if none).
    pub fn consistency(&self) -> (T, T) {
        let g = self.full();
        let mut row = T::zero();
        let mut neg = T::zero();
        for i in 0..g.nrows() {
            row = row.max(g.row(i).sum().abs());
            for j in 0..g.ncols() {
                if i != j {
                    neg = neg.min(g[(i, j)]);
                }
            }
        }
        (row, neg)
    }

    /// Σ_transitions rate·(F(to) − F(from))², per starting state.
    pub fn transition_energy(&self, f: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.ring.states());
        for t in &self.transitions {
            let d = f[t.to] - f[t.from];
            out[t.from] += t.rate * d * d;
        }
        out
    }
}

/// Rate-one simple exclusion generator on every bond of the ring.
pub fn simple_exclusion<T: RealField + Copy>(ring: RingSpace) -> DMatrix<T> {
    let size = ring.states();
    let mut m = DMatrix::zeros(size, size);
    for s in 0..size {
        for z in 0..ring.size() {
            add_rate(&mut m, s, ring.exchange(s, z), T::one());
        }
    }
    m
}
