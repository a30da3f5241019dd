use nalgebra::{convert, DMatrix, DVector, RealField};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result, XwalkError};
use crate::kmc::DynamicsSpec;
use crate::stats::Moments;

use super::generator::{simple_exclusion, GeneratorMatrix};
use super::ring::RingSpace;

/// ⟨g, h⟩ in L²(ν).
pub fn nu_inner<T: RealField + Copy>(nu: &DVector<T>, g: &DVector<T>, h: &DVector<T>) -> T {
    nu.iter()
        .zip(g.iter())
        .zip(h.iter())
        .fold(T::zero(), |acc, ((&w, &a), &b)| acc + w * a * b)
}

/// Non-negative f with ∫ f dν = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector<T: RealField> {
    values: DVector<T>,
}

impl<T: RealField + Copy> DensityVector<T> {
    pub fn new(values: DVector<T>, nu: &DVector<T>) -> Result<Self> {
        if values.len() != nu.len() {
            return Err(XwalkError::InvalidDensity(format!(
                "{} entries for {} states",
                values.len(),
                nu.len()
            )));
        }
        if values.iter().any(|v| !(*v >= T::zero())) {
            return Err(XwalkError::InvalidDensity("negative or NaN entry".into()));
        }
        let mass = values.dot(nu);
        let tol = T::default_epsilon().sqrt();
        if (mass - T::one()).abs() > tol {
            return Err(XwalkError::InvalidDensity(format!("∫ f dν = {mass}, expected 1")));
        }
        Ok(Self { values })
    }

    pub fn uniform(ring: RingSpace) -> Self {
        Self {
            values: DVector::from_element(ring.states(), T::one()),
        }
    }

    /// Squares of independent standard normals, normalized in L¹(ν).
    pub fn random<R: Rng + ?Sized>(nu: &DVector<T>, rng: &mut R) -> Self {
        loop {
            let raw = DVector::from_fn(nu.len(), |_, _| {
                let g: f64 = rng.sample(StandardNormal);
                convert::<f64, T>(g * g)
            });
            let mass = raw.dot(nu);
            if mass > T::zero() {
                return Self { values: raw / mass };
            }
        }
    }

    pub fn values(&self) -> &DVector<T> {
        &self.values
    }

    pub fn sqrt(&self) -> DVector<T> {
        self.values.map(|v| v.sqrt())
    }
}

/// D(f) = ½ Σ_bonds Σ_s (√f(s^{z,z+1}) − √f(s))² ν(s).
pub fn dirichlet_form<T: RealField + Copy>(ring: RingSpace, f: &DensityVector<T>, nu: &DVector<T>) -> T {
    let g = f.sqrt();
    let mut total = T::zero();
    for s in 0..ring.states() {
        for z in 0..ring.size() {
            let d = g[ring.exchange(s, z)] - g[s];
            total += nu[s] * d * d;
        }
    }
    total * convert(0.5)
}

/// ⟨√f, −G_ex √f⟩_ν for rate-one simple exclusion.
pub fn dirichlet_quadratic<T: RealField + Copy>(ring: RingSpace, f: &DensityVector<T>, nu: &DVector<T>) -> T {
    quadratic_with(&simple_exclusion::<T>(ring), f, nu)
}

fn quadratic_with<T: RealField + Copy>(sep: &DMatrix<T>, f: &DensityVector<T>, nu: &DVector<T>) -> T {
    let g = f.sqrt();
    -nu_inner(nu, &g, &(sep * &g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletTrial {
    pub trial: usize,
    pub lhs: f64,
    /// −n²·κ·D(f) + n·osc, with κ = 1 for simple exclusion and ε₀ under speed change.
    pub rhs: f64,
    /// Same with κ = 1/ε₀.
    pub rhs_inverse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletReport {
    pub size: usize,
    pub n: u32,
    pub rho: f64,
    pub trials: Vec<DirichletTrial>,
    pub max_lhs: f64,
    /// max(lhs − rhs), negative when the bound holds with room to spare.
    pub max_violation: f64,
    /// Trials with lhs − rhs > tolerance.
    pub violations: usize,
    /// Trials violating the version with coefficient 1/ε₀ (equal to
    /// `violations` for simple exclusion).
    pub inverse_violations: usize,
    /// Largest |D(f) − ⟨√f, −G_ex √f⟩| over the trials.
    pub identity_error: f64,
}

/// Tests ⟨√f, G√f⟩_ν ≤ −n²κ D(f) + n·Σ_z(sup γ_z − inf γ_z) on random densities.
/// The first trial is always f ≡ 1.
pub fn check_dirichlet_bound<R: Rng + ?Sized>(
    ring: RingSpace,
    spec: &DynamicsSpec,
    rho: f64,
    trials: usize,
    tolerance: f64,
    rng: &mut R,
) -> Result<DirichletReport> {
    if !spec.long_range.is_empty() {
        return Err(XwalkError::Unsupported(
            "Dirichlet bound without macroscopic jumps only".into(),
        ));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(invalid("rho", format!("{rho} outside [0, 1]")));
    }
    let gen = GeneratorMatrix::<f64>::build(ring, spec)?;
    let g = gen.full();
    let sep = simple_exclusion::<f64>(ring);
    let nu = ring.product_measure(rho);
    let n = spec.n as f64;
    let eps0 = spec.epsilon0();
    let strong = spec.exchange_multiplier * eps0;
    let weak = spec.exchange_multiplier / eps0;
    let walk = n * spec.walker.oscillation();
    let mut report = DirichletReport {
        size: ring.size(),
        n: spec.n,
        rho,
        trials: Vec::with_capacity(trials),
        max_lhs: f64::NEG_INFINITY,
        max_violation: f64::NEG_INFINITY,
        violations: 0,
        inverse_violations: 0,
        identity_error: 0.0,
    };
    for trial in 0..trials {
        let f = if trial == 0 {
            DensityVector::uniform(ring)
        } else {
            DensityVector::random(&nu, rng)
        };
        let root = f.sqrt();
        let lhs = nu_inner(&nu, &root, &(&g * &root));
        let d = dirichlet_form(ring, &f, &nu);
        let dq = quadratic_with(&sep, &f, &nu);
        report.identity_error = report.identity_error.max((d - dq).abs());
        let rhs = -n * n * strong * d + walk;
        let rhs_inverse = -n * n * weak * d + walk;
        report.max_lhs = report.max_lhs.max(lhs);
        report.max_violation = report.max_violation.max(lhs - rhs);
        report.violations += usize::from(lhs - rhs > tolerance);
        report.inverse_violations += usize::from(lhs - rhs_inverse > tolerance);
        report.trials.push(DirichletTrial {
            trial,
            lhs,
            rhs,
            rhs_inverse,
        });
    }
    Ok(report)
}

/// ‖ν·M‖₁: zero iff ν is invariant for M.
pub fn invariance_residual<T: RealField + Copy>(m: &DMatrix<T>, nu: &DVector<T>) -> T {
    m.tr_mul(nu).lp_norm(1)
}

/// ‖ν_ρ·G_rw‖₁ for the unscaled walker part.
pub fn noninvariance_witness(ring: RingSpace, spec: &DynamicsSpec, rho: f64) -> Result<f64> {
    let gen = GeneratorMatrix::<f64>::build(ring, spec)?;
    Ok(invariance_residual(gen.walk_part(), &ring.product_measure(rho)))
}

/// max |⟨g, Mh⟩_ν − ⟨Mg, h⟩_ν| over random normal pairs (g, h).
pub fn reversibility_residual<T: RealField + Copy, R: Rng + ?Sized>(
    m: &DMatrix<T>,
    nu: &DVector<T>,
    pairs: usize,
    rng: &mut R,
) -> T {
    let mut normal = |len: usize| DVector::from_fn(len, |_, _| convert::<f64, T>(rng.sample(StandardNormal)));
    let mut worst = T::zero();
    for _ in 0..pairs {
        let g = normal(nu.len());
        let h = normal(nu.len());
        let d = nu_inner(nu, &g, &(m * &h)) - nu_inner(nu, &(m * &g), &h);
        worst = worst.max(d.abs());
    }
    worst
}

/// Γ(F) = G(F²) − 2F·GF.
pub fn carre_du_champ<T: RealField + Copy>(g: &DMatrix<T>, f: &DVector<T>) -> DVector<T> {
    let sq = f.component_mul(f);
    let gf = g * f;
    g * sq - f.component_mul(&gf) * convert::<f64, T>(2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleCheck {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    /// 𝔼∫₀ᵗ Γ(F)(ξ_s) ds from the augmented matrix exponential.
    pub expected_variance: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVariationReport {
    /// max_s |Γ(F)(s) − Σ_transitions rate·(ΔF)²|.
    pub entry_error: f64,
    pub monte_carlo: Option<MartingaleCheck>,
}

/// Entrywise carré-du-champ identity, plus (for `samples > 0`) the variance
/// of the Dynkin martingale F(ξ_t) − F(ξ_0) − ∫₀ᵗ GF(ξ_s) ds started from `init`.
pub fn quadratic_variation_identity<R: Rng + ?Sized>(
    gen: &GeneratorMatrix<f64>,
    f: &DVector<f64>,
    init: usize,
    t: f64,
    samples: usize,
    rng: &mut R,
) -> Result<QuadraticVariationReport> {
    let g = gen.full();
    if f.len() != g.nrows() || init >= g.nrows() {
        return Err(invalid("F", "length or initial state does not match the state space"));
    }
    let gamma = carre_du_champ(&g, f);
    let energy = gen.transition_energy(f);
    let entry_error = (&gamma - &energy).amax();
    if samples == 0 {
        return Ok(QuadraticVariationReport {
            entry_error,
            monte_carlo: None,
        });
    }
    if samples < 2 || !(t > 0.0) {
        return Err(invalid("samples", "need at least two samples and t > 0"));
    }
    let gf = &g * f;
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut s = init;
        let mut now = 0.0;
        let mut integral = 0.0;
        loop {
            let out = -g[(s, s)];
            let dt = if out > 0.0 {
                -(1.0 - rng.random::<f64>()).ln() / out
            } else {
                f64::INFINITY
            };
            if now + dt >= t {
                integral += gf[s] * (t - now);
                break;
            }
            integral += gf[s] * dt;
            now += dt;
            let mut u = rng.random::<f64>() * out;
            let mut next = s;
            for j in 0..g.ncols() {
                if j == s || g[(s, j)] <= 0.0 {
                    continue;
                }
                next = j;
                u -= g[(s, j)];
                if u < 0.0 {
                    break;
                }
            }
            s = next;
        }
        values.push(f[s] - f[init] - integral);
    }
    let m = Moments::from_slice(&values);
    let expected = integrated_expectation(&g, &gamma, init, t);
    let se = Moments::variance_stderr(&values);
    Ok(QuadraticVariationReport {
        entry_error,
        monte_carlo: Some(MartingaleCheck {
            samples,
            mean: m.mean,
            variance: m.variance,
            variance_stderr: se,
            expected_variance: expected,
            z_score: (m.variance - expected) / se,
        }),
    })
}

/// ∫₀ᵗ (e^{sG} h)(init) ds via the exponential of [[G, h], [0, 0]].
pub fn integrated_expectation(g: &DMatrix<f64>, h: &DVector<f64>, init: usize, t: f64) -> f64 {
    let size = g.nrows();
    let mut aug = DMatrix::zeros(size + 1, size + 1);
    aug.view_mut((0, 0), (size, size)).copy_from(&(g * t));
    aug.view_mut((0, size), (size, 1)).copy_from(&(h * t));
    expm(&aug)[(init, size)]
}

/// Matrix exponential (scaling and squaring with a Padé approximant).
pub fn expm<T: RealField + Copy>(m: &DMatrix<T>) -> DMatrix<T> {
    m.clone().exp()
}

/// Row vector μ₀·e^{tG}.
pub fn evolve<T: RealField + Copy>(g: &DMatrix<T>, mu0: &DVector<T>, t: T) -> DVector<T> {
    expm(&(g * t)).tr_mul(mu0)
}

/// H(μ | ν) = Σ μ log(μ/ν) with 0·log 0 = 0; infinite when μ ≪ ν fails.
pub fn relative_entropy<T: RealField + Copy>(mu: &DVector<T>, nu: &DVector<T>) -> T {
    let mut h = T::zero();
    for (&m, &v) in mu.iter().zip(nu.iter()) {
        if m > T::zero() {
            if v <= T::zero() {
                return convert(f64::INFINITY);
            }
            h += m * (m / v).ln();
        }
    }
    h
}

/// H(μ_t | ν_ρ) along the given times, with μ_t = μ₀·e^{tG}.
pub fn entropy_decay_probe<T: RealField + Copy>(
    gen: &GeneratorMatrix<T>,
    mu0: &DVector<T>,
    rho: T,
    times: &[T],
) -> Result<Vec<T>> {
    let nu = gen.ring().product_measure(rho);
    if mu0.len() != nu.len() || mu0.iter().any(|p| *p < T::zero()) {
        return Err(XwalkError::InvalidDensity(
            "μ₀ must be a probability vector over states".into(),
        ));
    }
    let g = gen.full();
    let floor: T = convert(-1e-12);
    times
        .iter()
        .map(|&t| {
            let mut mu = evolve(&g, mu0, t);
            if let Some(bad) = mu.iter().find(|p| **p < floor) {
                return Err(XwalkError::NumericalFailure(format!("μ_t has entry {bad} at t = {t}")));
            }
            mu.apply(|p| *p = p.max(T::zero()));
            Ok(relative_entropy(&mu, &nu))
        })
        .collect()
}
