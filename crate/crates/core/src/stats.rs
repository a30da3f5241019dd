//! Summation, moments and two-sample distribution tests.

use crate::error::{Result, XwalkError};
use crate::scalar::Scalar;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Scalar> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Sample moments from a two-pass compensated computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance; zero when fewer than two samples.
    pub variance: f64,
}

impl Moments {
    pub fn from_slice(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                variance: f64::NAN,
            };
        }
        let mean = xs.iter().copied().collect::<CompensatedSum<f64>>().value() / count as f64;
        let variance = if count > 1 {
            xs.iter()
                .map(|&x| (x - mean) * (x - mean))
                .collect::<CompensatedSum<f64>>()
                .value()
                / (count - 1) as f64
        } else {
            0.0
        };
        Self { count, mean, variance }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    /// Standard error of the sample variance, estimated from the fourth central moment.
    pub fn variance_stderr(xs: &[f64]) -> f64 {
        let m = Self::from_slice(xs);
        let n = xs.len() as f64;
        let m4 = xs
            .iter()
            .map(|&x| (x - m.mean).powi(4))
            .collect::<CompensatedSum<f64>>()
            .value()
            / n;
        ((m4 - m.variance * m.variance * (n - 3.0) / (n - 1.0)) / n)
            .max(0.0)
            .sqrt()
    }
}

/// Median (average of the two central order statistics for even sizes).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile of a sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F_a − F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(XwalkError::InsufficientData(
            "Kolmogorov-Smirnov test needs two non-empty samples".into(),
        ));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(XwalkError::InsufficientData("empty sample".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(|x, y| x.total_cmp(y));
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    }))
}

/// Survival function of the Kolmogorov distribution, Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a two-sample KS statistic with sample sizes `na`, `nb`.
pub fn ks_p_value(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let s = ne.sqrt();
    kolmogorov_sf((s + 0.12 + 0.11 / s) * d)
}

/// Asymptotic two-sample critical value c(α)·sqrt((na+nb)/(na·nb)).
pub fn ks_critical_value(alpha: f64, na: usize, nb: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * (((na + nb) as f64) / ((na * nb) as f64)).sqrt()
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .collect::<CompensatedSum<f64>>()
        .value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn moments_of_known_sample() {
        let m = Moments::from_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
        assert!(ks_two_sample(&a, &[]).is_err());
    }

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.36) ≈ 0.049, Q(1.63) ≈ 0.0098 (classical table values).
        assert!((kolmogorov_sf(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 1e-3);
        assert!((ks_critical_value(0.01, 1, 1) / 2f64.sqrt() - 1.6276).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn moments_are_permutation_invariant(mut xs in proptest::collection::vec(-1e3f64..1e3, 2..200), seed in 0u64..1000) {
            let m1 = Moments::from_slice(&xs);
            // deterministic shuffle
            let len = xs.len();
            let mut state = seed;
            for i in (1..len).rev() {
                state = crate::rng::splitmix64(state);
                xs.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let m2 = Moments::from_slice(&xs);
            prop_assert!((m1.mean - m2.mean).abs() <= 1e-12 * (1.0 + m1.mean.abs()));
            prop_assert!((m1.variance - m2.variance).abs() <= 1e-12 * (1.0 + m1.variance.abs()));
        }
    }
}
