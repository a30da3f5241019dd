use xwalk_core::kmc::{simulate, DynamicsSpec, ObservationPlan};
use xwalk_core::lattice::{sample_initial, Boundary, LatticeState, Profile, WalkerRates, Window};
use xwalk_core::observables::replacement_statistic;
use xwalk_core::rng::path_rng;
use xwalk_core::stats::{median, Moments};

fn ring(rho: f64, n: u32, k: f64, seed: u64) -> LatticeState {
    let p = Profile::constant(rho).unwrap();
    sample_initial(
        &p,
        n,
        Window::symmetric(n, k).unwrap(),
        Boundary::Periodic,
        &mut path_rng(seed, &[0]),
    )
    .unwrap()
}

#[test]
fn martingale_variance_matches_quadratic_variation() {
    let (n, t) = (50, 0.5);
    let spec = DynamicsSpec::nearest_neighbor(n, WalkerRates::new(2.0, 1.0).unwrap(), t);
    let plan = ObservationPlan::endpoint(t);
    let m: Vec<f64> = (0..800)
        .map(|r| {
            let rec = simulate(&spec, ring(0.3, n, 2.0, r), &plan, &mut [], &mut path_rng(r, &[1])).unwrap();
            *rec.mtilde.unwrap().last().unwrap()
        })
        .collect();
    let mom = Moments::from_slice(&m);
    let expected = 3.0 * t / n as f64;
    let se = Moments::variance_stderr(&m);
    assert!(
        (mom.variance - expected).abs() <= 4.0 * se,
        "{} vs {expected} ± {se}",
        mom.variance
    );
}

#[test]
fn martingale_vanishes_as_n_grows() {
    let t = 0.25;
    let plan = ObservationPlan::endpoint(t).with_sample_times((0..=10).map(|k| t * k as f64 / 10.0).collect());
    let medians: Vec<f64> = [50u32, 100, 200, 400]
        .iter()
        .map(|&n| {
            let spec = DynamicsSpec::nearest_neighbor(n, WalkerRates::new(2.0, 1.0).unwrap(), t);
            let sups: Vec<f64> = (0..40)
                .map(|r| {
                    let rec = simulate(
                        &spec,
                        ring(0.3, n, 1.0, 100 * n as u64 + r),
                        &plan,
                        &mut [],
                        &mut path_rng(r, &[2, n as u64]),
                    )
                    .unwrap();
                    rec.sup_abs_mtilde().unwrap()
                })
                .collect();
            median(&sups)
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn replacement_statistic_shrinks_with_the_block() {
    let (n, t) = (100, 0.5);
    let eps = vec![0.4, 0.2, 0.1, 0.05];
    let spec = DynamicsSpec::nearest_neighbor(n, WalkerRates::new(2.0, 1.0).unwrap(), t);
    let plan = ObservationPlan::endpoint(t).with_epsilons(eps.clone());
    let mut sums = vec![Vec::new(); eps.len()];
    for r in 0..100 {
        let rec = simulate(&spec, ring(0.4, n, 2.0, r), &plan, &mut [], &mut path_rng(r, &[3])).unwrap();
        for (k, &e) in eps.iter().enumerate() {
            sums[k].push(replacement_statistic(&rec, e, t).unwrap());
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| Moments::from_slice(s).mean).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}
