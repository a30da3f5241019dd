use crate::error::{invalid, Result, XwalkError};
use crate::hydro::drift::{drift_gamma, drift_speed_bound};
use crate::hydro::grid::{default_half_width, GridParams, PdeGrid};
use crate::hydro::tridiag::solve_tridiagonal;
use crate::lattice::{LocalFunction, Profile, WalkerRates};
use crate::scalar::Scalar;

/// Solution in the walker frame together with the accumulated frame shift.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSolution<T> {
    pub grid: PdeGrid<T>,
    /// ∫₀^{t_k} v(s) ds at each stored level (trapezoidal in time).
    pub shift: Vec<T>,
    /// Transport coefficient v(t_k) = γ(û(t_k, 0)) at each stored level.
    pub coefficient: Vec<T>,
}

/// Instability threshold: values must stay in [−δ, 1 + δ].
const INSTABILITY: f64 = 1e-6;

struct Setup<T> {
    x_min: T,
    dx: T,
    nx: usize,
    origin: usize,
    steps: usize,
    dt: T,
}

fn setup<T: Scalar>(profile: &Profile, horizon: T, params: &GridParams<T>, speed: T, spread: T) -> Result<Setup<T>> {
    params.validate()?;
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(invalid("horizon", format!("{horizon} must be positive")));
    }
    let width = params
        .half_width
        .unwrap_or_else(|| default_half_width(profile, speed, horizon, params.diffusivity * spread));
    let m = (width / params.dx).ceil().to_usize().unwrap_or(0).max(2);
    let steps = (horizon / params.dt - T::of(1e-9))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(1);
    Ok(Setup {
        x_min: -T::from_count(m) * params.dx,
        dx: params.dx,
        nx: 2 * m + 1,
        origin: m,
        steps,
        dt: horizon / T::from_count(steps),
    })
}

fn initial_values<T: Scalar>(profile: &Profile, s: &Setup<T>) -> Vec<T> {
    let h = 0.5 * s.dx.as_f64();
    let mut u: Vec<T> = (0..s.nx)
        .map(|i| {
            let x = (s.x_min + T::from_count(i) * s.dx).as_f64();
            T::of(profile.cell_average(x - h, x + h))
        })
        .collect();
    u[0] = T::of(profile.left_limit());
    u[s.nx - 1] = T::of(profile.right_limit());
    u
}

/// One θ-step of ∂_t u = κ∂²Φ(u) + v∂_x u with Φ(u) = u + a u², transport
/// explicit and upwinded, diffusion linearized around the current level.
struct Stepper<T> {
    kappa: T,
    a: T,
    dx: T,
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
    rhs: Vec<T>,
    scratch: Vec<T>,
}

impl<T: Scalar> Stepper<T> {
    fn new(nx: usize, kappa: T, a: T, dx: T) -> Self {
        let m = nx - 2;
        Self {
            kappa,
            a,
            dx,
            lower: vec![T::zero(); m],
            diag: vec![T::zero(); m],
            upper: vec![T::zero(); m],
            rhs: vec![T::zero(); m],
            scratch: Vec::new(),
        }
    }

    fn step(&mut self, u: &mut [T], h: T, theta: T, v: T) -> Result<()> {
        let nx = u.len();
        let two = T::of(2.0);
        let inv_dx2 = T::one() / (self.dx * self.dx);
        let phi = |w: T| w + self.a * w * w;
        let dphi = |w: T| T::one() + two * self.a * w;
        let c = theta * h * self.kappa * inv_dx2;
        for i in 1..nx - 1 {
            let r = i - 1;
            let lap = (phi(u[i - 1]) - two * phi(u[i]) + phi(u[i + 1])) * inv_dx2;
            let transport = if v > T::zero() {
                v * (u[i + 1] - u[i]) / self.dx
            } else {
                v * (u[i] - u[i - 1]) / self.dx
            };
            self.rhs[r] = h * (self.kappa * lap + transport);
            self.lower[r] = if i > 1 { -c * dphi(u[i - 1]) } else { T::zero() };
            self.upper[r] = if i < nx - 2 { -c * dphi(u[i + 1]) } else { T::zero() };
            self.diag[r] = T::one() + two * c * dphi(u[i]);
        }
        solve_tridiagonal(&self.lower, &self.diag, &self.upper, &mut self.rhs, &mut self.scratch)?;
        for (ui, &d) in u[1..nx - 1].iter_mut().zip(&self.rhs) {
            *ui = *ui + d;
        }
        Ok(())
    }
}

fn check_stable<T: Scalar>(u: &[T], t: T) -> Result<()> {
    let lo = T::of(-INSTABILITY);
    let hi = T::of(1.0 + INSTABILITY);
    if let Some(v) = u.iter().find(|&&v| !(v >= lo && v <= hi)) {
        return Err(XwalkError::SchemeFailure(format!(
            "value {v} outside [0, 1] at t = {t}"
        )));
    }
    Ok(())
}

/// Core integrator shared by every macroscopic equation.
fn integrate<T: Scalar>(
    profile: &Profile,
    horizon: T,
    params: &GridParams<T>,
    a: T,
    drift: Option<&dyn Fn(T) -> T>,
    speed: T,
) -> Result<ShiftedSolution<T>> {
    let spread = T::one() + T::of(2.0) * a.max(T::zero());
    let s = setup(profile, horizon, params, speed, spread)?;
    let mut u = initial_values(profile, &s);
    let mut stepper = Stepper::new(s.nx, params.diffusivity, a, s.dx);
    let coef = |u: &[T]| drift.map_or(T::zero(), |g| g(u[s.origin]));
    let half = T::of(0.5);
    let save_every = params.save_every.max(1);

    let mut v = coef(&u);
    let mut shift = T::zero();
    let mut times = vec![T::zero()];
    let mut values = vec![u.clone()];
    let mut shifts = vec![T::zero()];
    let mut coefficients = vec![v];
    for k in 0..s.steps {
        if k < params.startup_steps {
            let h = half * s.dt;
            stepper.step(&mut u, h, T::one(), v)?;
            let v_mid = coef(&u);
            stepper.step(&mut u, h, T::one(), v_mid)?;
        } else {
            stepper.step(&mut u, s.dt, half, v)?;
        }
        let t = T::from_count(k + 1) * s.dt;
        check_stable(&u, t)?;
        let v_next = coef(&u);
        shift = shift + half * s.dt * (v + v_next);
        v = v_next;
        if (k + 1) % save_every == 0 || k + 1 == s.steps {
            times.push(t);
            values.push(u.clone());
            shifts.push(shift);
            coefficients.push(v);
        }
    }
    Ok(ShiftedSolution {
        grid: PdeGrid {
            x_min: s.x_min,
            dx: s.dx,
            nx: s.nx,
            dt: s.dt,
            times,
            values,
        },
        shift: shifts,
        coefficient: coefficients,
    })
}

/// ∂_t u = κ∂²_x u with u(0, ·) = u₀, Crank–Nicolson with a backward-Euler start.
pub fn solve_heat<T: Scalar>(profile: &Profile, horizon: T, params: &GridParams<T>) -> Result<PdeGrid<T>> {
    Ok(integrate(profile, horizon, params, T::zero(), None, T::zero())?.grid)
}

/// ∂_t u = κ∂²_x Φ(u) with Φ(ρ) = ρ + aρ², a > −1/2.
pub fn solve_phi_diffusion<T: Scalar>(
    profile: &Profile,
    a: T,
    horizon: T,
    params: &GridParams<T>,
) -> Result<PdeGrid<T>> {
    if !(a > T::of(-0.5)) {
        return Err(invalid("a", format!("{a} must exceed -1/2")));
    }
    Ok(integrate(profile, horizon, params, a, None, T::zero())?.grid)
}

/// ∂_t û = κ∂²_x û + γ(û(t, 0))∂_x û for an arbitrary drift law γ with
/// sup |γ| ≤ `speed` on [0, 1].
pub fn solve_transport_pde<T: Scalar>(
    profile: &Profile,
    drift: &dyn Fn(T) -> T,
    speed: T,
    horizon: T,
    params: &GridParams<T>,
) -> Result<ShiftedSolution<T>> {
    integrate(profile, horizon, params, T::zero(), Some(drift), speed)
}

/// Walker-frame equation with coefficient (β − α)(1 − 2û(t, 0)).
pub fn solve_shifted_pde<T: Scalar>(
    profile: &Profile,
    rates: &WalkerRates,
    horizon: T,
    params: &GridParams<T>,
) -> Result<ShiftedSolution<T>> {
    let drift = |rho: T| rates.drift(rho);
    let speed = T::of((rates.beta - rates.alpha).abs());
    solve_transport_pde(profile, &drift, speed, horizon, params)
}

/// Walker-frame equation with coefficient γ(û(t, 0)) = Σ_z z·ν_û(γ_z).
pub fn solve_general_pde<T: Scalar>(
    profile: &Profile,
    jumps: &[(i64, LocalFunction)],
    horizon: T,
    params: &GridParams<T>,
) -> Result<ShiftedSolution<T>> {
    let drift = |rho: T| drift_gamma(jumps, rho);
    solve_transport_pde(profile, &drift, drift_speed_bound(jumps), horizon, params)
}
