use xwalk_core::hydro::{
    drift_gamma, solve_general_pde, solve_heat, solve_phi_diffusion, solve_shifted_pde, solve_transport_pde,
    solve_walker_ode, ConstantField, GridParams, HeatSolution, PdeGrid,
};
use xwalk_core::lattice::{LocalFunction, Profile, WalkerRates};
use xwalk_core::XwalkError;

fn coarse() -> GridParams<f64> {
    GridParams::standard().with_resolution(0.02, 1e-3)
}

fn final_max_diff(a: &PdeGrid<f64>, b: &PdeGrid<f64>) -> f64 {
    assert_eq!(a.nx, b.nx);
    a.last()
        .iter()
        .zip(b.last())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// max over nodes of |numerical − exact| at the final time.
fn heat_error(p: &Profile, horizon: f64, params: &GridParams<f64>) -> f64 {
    let exact = HeatSolution::new(p, params.diffusivity).unwrap();
    let g = solve_heat(p, horizon, params).unwrap();
    let t = g.final_time();
    (0..g.nx)
        .map(|i| (g.last()[i] - exact.eval(t, g.x(i))).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constants_are_stationary() {
    let p = Profile::constant(0.37).unwrap();
    let g = solve_heat(&p, 0.3, &coarse()).unwrap();
    assert!(g.values.iter().flatten().all(|v| (v - 0.37).abs() < 1e-14));
    let g = solve_phi_diffusion(&p, 1.0, 0.3, &coarse()).unwrap();
    assert!(g.values.iter().flatten().all(|v| (v - 0.37).abs() < 1e-14));
}

#[test]
fn symmetric_step_stays_at_one_half() {
    let p = Profile::step(1.0, 0.0).unwrap();
    let g = solve_heat(&p, 0.5, &coarse()).unwrap();
    let origin = g.node(0.0).unwrap();
    for row in &g.values {
        assert!((row[origin] - 0.5).abs() < 1e-12);
    }
}

#[test]
fn heat_converges_at_second_order() {
    let p = Profile::step(0.8, 0.2).unwrap();
    let base = GridParams::standard().with_resolution(0.04, 1e-3);
    let errors: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&f| heat_error(&p, 0.5, &base.refined(f)))
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "order {order} from {errors:?}");
    }
}

#[test]
fn heat_respects_the_maximum_principle() {
    for p in [
        Profile::step(0.8, 0.2).unwrap(),
        Profile::piecewise(vec![-0.5, 0.25], vec![0.1, 0.9, 0.3]).unwrap(),
        Profile::ramp(1.0, 0.0, 0.4).unwrap(),
    ] {
        let g = solve_heat(&p, 0.5, &GridParams::standard()).unwrap();
        assert!(g.max_principle_violation(p.min_value(), p.max_value()) < 1e-8);
        assert_eq!(g.last()[0], p.left_limit());
        assert_eq!(g.last()[g.nx - 1], p.right_limit());
    }
}

#[test]
fn single_precision_tracks_double() {
    let p = Profile::step(0.8, 0.2).unwrap();
    let g64 = solve_heat(&p, 0.2, &coarse()).unwrap();
    let g32 = solve_heat(&p, 0.2f32, &GridParams::<f32>::standard().with_resolution(0.02, 1e-3)).unwrap();
    assert_eq!(g32.nx, g64.nx);
    for (a, b) in g32.last().iter().zip(g64.last()) {
        assert!((*a as f64 - b).abs() < 1e-4);
    }
}

#[test]
fn bilinear_interpolation_is_exact_on_linear_data() {
    let g: PdeGrid<f64> = PdeGrid {
        x_min: -1.0,
        dx: 0.5,
        nx: 5,
        dt: 1.0,
        times: vec![0.0, 1.0],
        values: vec![vec![0.0, 0.5, 1.0, 1.5, 2.0], vec![1.0, 1.5, 2.0, 2.5, 3.0]],
    };
    assert!((g.eval(0.25, 0.3).unwrap() - (1.3 + 0.25)).abs() < 1e-15);
    assert!(matches!(g.eval(0.5, 1.5), Err(XwalkError::DomainExhausted { .. })));
    assert!(g.eval(1.5, 0.0).is_err());
}

#[test]
fn walker_ode_constant_density() {
    let r = WalkerRates::new(2.0, 1.0).unwrap();
    let path = solve_walker_ode(&ConstantField(0.3f64), &r, 0.5, 1e-3).unwrap();
    for (t, f) in path.times.iter().zip(&path.f) {
        assert!((f - (-0.4) * t).abs() < 1e-12);
    }
    assert!(path.residual <= 1e-10);
}

#[test]
fn walker_ode_trapped_by_antisymmetric_step() {
    let p = Profile::step(0.8, 0.2).unwrap();
    let heat = HeatSolution::<f64>::new(&p, 1.0).unwrap();
    let r = WalkerRates::new(2.0, 1.0).unwrap();
    let path = solve_walker_ode(&heat, &r, 0.5, 1e-3).unwrap();
    assert!(path.f.iter().all(|f| f.abs() < 1e-14));
    let numeric = solve_heat(&p, 0.5, &coarse()).unwrap();
    let path = solve_walker_ode(&numeric, &r, 0.5, 1e-3).unwrap();
    assert!(path.f.iter().all(|f| f.abs() < 1e-12));
}

#[test]
fn walker_ode_without_bias_stays_put() {
    let p = Profile::piecewise(vec![-0.3, 0.1], vec![0.9, 0.2, 0.6]).unwrap();
    let heat = HeatSolution::<f64>::new(&p, 1.0).unwrap();
    let r = WalkerRates::new(1.5, 1.5).unwrap();
    let path = solve_walker_ode(&heat, &r, 0.5, 1e-3).unwrap();
    assert!(path.f.iter().all(|&f| f == 0.0));
}

#[test]
fn walker_ode_asymmetric_step() {
    let p = Profile::step(0.8, 0.4).unwrap();
    let heat = HeatSolution::<f64>::new(&p, 1.0).unwrap();
    let r = WalkerRates::new(1.0, 2.0).unwrap();
    let path = solve_walker_ode(&heat, &r, 0.5f64, 1e-4).unwrap();
    let fine = solve_walker_ode(&heat, &r, 0.5, 5e-5).unwrap();
    assert!(path.residual <= 1e-8);
    assert!((path.at(0.5) - fine.at(0.5)).abs() <= 1e-8);
    assert!(path.lipschitz() <= 1.0 + 1e-12);
    assert!(path.at(0.5) < 0.0);
}

#[test]
fn walker_ode_reports_domain_exhaustion() {
    let p = Profile::step(0.8, 0.4).unwrap();
    let grid = solve_heat(&p, 1.0, &coarse().with_half_width(0.1)).unwrap();
    let r = WalkerRates::new(0.0, 3.0).unwrap();
    let err = solve_walker_ode(&grid, &r, 1.0, 1e-3);
    assert!(matches!(err, Err(XwalkError::DomainExhausted { .. })));
}

#[test]
fn shifted_pde_matches_shifted_heat() {
    let p = Profile::step(0.8, 0.4).unwrap();
    let r = WalkerRates::new(1.0, 2.0).unwrap();
    let params = GridParams::standard();
    let sh = solve_shifted_pde(&p, &r, 0.5, &params).unwrap();
    let heat = solve_heat(&p, 0.5, &params.with_half_width(8.0)).unwrap();
    let path = solve_walker_ode(&heat, &r, 0.5f64, 1e-4).unwrap();
    let mut worst = 0.0f64;
    for (k, &t) in sh.grid.times.iter().enumerate() {
        let ft = path.at(t);
        for i in 0..sh.grid.nx {
            let u = heat.at_level(k, sh.grid.x(i) + ft).unwrap();
            worst = worst.max((sh.grid.values[k][i] - u).abs());
        }
    }
    assert!(worst <= 2e-3, "{worst}");
    assert!((sh.shift.last().unwrap() - path.at(0.5)).abs() < 1e-4);
}

#[test]
fn shifted_pde_constant_density() {
    let p = Profile::constant(0.3).unwrap();
    let r = WalkerRates::new(2.0, 1.0).unwrap();
    let sh = solve_shifted_pde(&p, &r, 0.5, &coarse()).unwrap();
    assert!(sh.grid.values.iter().flatten().all(|v| (v - 0.3).abs() < 1e-14));
    for (t, s) in sh.grid.times.iter().zip(&sh.shift) {
        assert!((s - (-0.4) * t).abs() < 1e-12);
    }
}

#[test]
fn shifted_pde_shift_converges_on_refinement() {
    let p = Profile::step(0.8, 0.4).unwrap();
    let r = WalkerRates::new(1.0, 2.0).unwrap();
    let base = GridParams::standard().with_resolution(0.02, 1e-3);
    let shift = |f: usize| -> f64 {
        *solve_shifted_pde(&p, &r, 0.5, &base.refined(f))
            .unwrap()
            .shift
            .last()
            .unwrap()
    };
    let reference = shift(4);
    let e1 = (shift(1) - reference).abs();
    let e2 = (shift(2) - reference).abs();
    assert!(e2 < e1, "{e1} {e2}");
    // the front moves opposite to the frame: the walker goes left, û drifts right
    assert!(reference < 0.0);
}

#[test]
fn walker_frame_mass_is_conserved() {
    let p = Profile::piecewise(vec![-0.2, 0.3], vec![0.5, 0.8, 0.5]).unwrap();
    let r = WalkerRates::new(1.0, 3.0).unwrap();
    let sh = solve_shifted_pde(&p, &r, 0.5, &coarse()).unwrap();
    let m0 = sh.grid.mass(0);
    let m1 = sh.grid.mass(sh.grid.times.len() - 1);
    assert!((m1 - m0).abs() <= 1e-8 * 0.5, "{m0} {m1}");
}

#[test]
fn phi_diffusion_reduces_to_heat() {
    let p = Profile::step(0.8, 0.2).unwrap();
    let a = solve_phi_diffusion(&p, 0.0, 0.3, &coarse()).unwrap();
    let h = solve_heat(&p, 0.3, &coarse()).unwrap();
    assert!(final_max_diff(&a, &h) < 1e-10);
    assert!(solve_phi_diffusion(&p, -0.5, 0.3, &coarse()).is_err());
}

#[test]
fn phi_diffusion_converges_at_second_order() {
    let p = Profile::step(0.8, 0.2).unwrap();
    let base = GridParams::standard().with_resolution(0.04, 1e-3).with_half_width(4.0);
    let reference: PdeGrid<f64> = solve_phi_diffusion(&p, 1.0, 0.3, &base.refined(16)).unwrap();
    let k = reference.times.len() - 1;
    let errors: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&f| {
            let g = solve_phi_diffusion(&p, 1.0, 0.3, &base.refined(f)).unwrap();
            (0..g.nx)
                .map(|i| (g.last()[i] - reference.at_level(k, g.x(i)).unwrap()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "order {order} from {errors:?}");
    }
}

/// Distance between the points where u crosses the levels 0.25 and 0.75.
fn front_width(g: &PdeGrid<f64>) -> f64 {
    let row = g.last();
    let cross = |level: f64| {
        let i = (0..g.nx - 1)
            .find(|&i| (row[i] - level) * (row[i + 1] - level) <= 0.0)
            .unwrap();
        g.x(i) + g.dx * (row[i] - level) / (row[i] - row[i + 1])
    };
    (cross(0.25) - cross(0.75)).abs()
}

#[test]
fn speed_change_widens_the_front() {
    let p = Profile::step(1.0, 0.0).unwrap();
    let w0 = front_width(&solve_phi_diffusion(&p, 0.0, 0.3, &coarse()).unwrap());
    let w1 = front_width(&solve_phi_diffusion(&p, 1.0, 0.3, &coarse()).unwrap());
    assert!(w1 > w0, "{w1} vs {w0}");
}

#[test]
fn general_pde_special_cases() {
    let p = Profile::step(0.8, 0.4).unwrap();
    let r = WalkerRates::new(1.0, 2.0).unwrap();
    let base = solve_shifted_pde(&p, &r, 0.3, &coarse()).unwrap();
    let general = solve_general_pde(&p, &r.as_jump_table(), 0.3, &coarse()).unwrap();
    assert!(final_max_diff(&base.grid, &general.grid) < 1e-10);

    let zero = vec![(1, LocalFunction::constant(0.0).unwrap())];
    let g = solve_general_pde(&p, &zero, 0.3, &coarse()).unwrap();
    let h = solve_heat(&p, 0.3, &coarse()).unwrap();
    assert_eq!(g.grid.last(), h.last());

    // γ(ρ) = 2ρ − 1 vanishes at the symmetric density of the step
    let map = vec![
        (1, LocalFunction::on_origin(1.0, 2.0).unwrap()),
        (-1, LocalFunction::on_origin(2.0, 1.0).unwrap()),
    ];
    assert!(drift_gamma(&map, 0.5f64).abs() < 1e-15);
    let sym = Profile::step(0.8, 0.2).unwrap();
    let g = solve_general_pde(&sym, &map, 0.3, &coarse()).unwrap();
    assert!(g.shift.iter().all(|s| s.abs() < 1e-12));
}

#[test]
fn explicit_transport_instability_is_reported() {
    let p = Profile::step(0.9, 0.1).unwrap();
    let drift = |rho: f64| 2000.0 * (1.0 - 2.0 * rho) + 1000.0;
    let params = GridParams::standard().with_resolution(0.01, 0.01).with_half_width(3.0);
    let err = solve_transport_pde(&p, &drift, 3000.0, 0.5, &params);
    assert!(matches!(err, Err(XwalkError::SchemeFailure(_))), "{err:?}");
}
