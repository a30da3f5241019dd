use xwalk_core::kmc::{
    simulate, DynamicsSpec, EventKind, Exclusion, MacroClock, ObservationPlan, Observer, RunningTotals, WalkerSpec,
};
use xwalk_core::lattice::{sample_initial, Boundary, LatticeState, LocalFunction, Profile, WalkerRates, Window};
use xwalk_core::rng::{path_rng, stream_rng};
use xwalk_core::stats::Moments;
use xwalk_core::XwalkError;

fn rates(a: f64, b: f64) -> WalkerRates {
    WalkerRates::new(a, b).unwrap()
}

fn ring(profile: &Profile, n: u32, k: f64, seed: u64) -> LatticeState {
    let w = Window::symmetric(n, k).unwrap();
    sample_initial(profile, n, w, Boundary::Periodic, &mut stream_rng(seed, 0)).unwrap()
}

#[test]
fn particles_are_conserved_on_the_ring() {
    let p = Profile::step(0.8, 0.2).unwrap();
    let s = ring(&p, 30, 3.0, 1);
    let before = s.particle_count();
    let spec = DynamicsSpec::nearest_neighbor(30, rates(2.0, 1.0), 0.3);
    let rec = simulate(
        &spec,
        s,
        &ObservationPlan::standard(0.3),
        &mut [],
        &mut stream_rng(1, 1),
    )
    .unwrap();
    assert_eq!(rec.final_state.particle_count(), before);
    let total = (before as f64) / 30.0;
    for snap in &rec.snapshots {
        assert!((snap.total_mass() - total).abs() < 1e-9);
    }
}

#[test]
fn same_seed_same_record() {
    let p = Profile::ramp(0.9, 0.1, 0.5).unwrap();
    let spec = DynamicsSpec::nearest_neighbor(20, rates(1.0, 3.0), 0.4);
    let plan = ObservationPlan::standard(0.4).with_epsilons(vec![0.1, 0.3]);
    let run = || simulate(&spec, ring(&p, 20, 3.0, 5), &plan, &mut [], &mut stream_rng(5, 9)).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn event_log_replays_and_reintegrates() {
    let p = Profile::constant(0.4).unwrap();
    let n = 12;
    let horizon = 0.25;
    let spec = DynamicsSpec::nearest_neighbor(n, rates(2.0, 1.0), horizon);
    let plan = ObservationPlan::endpoint(horizon)
        .with_epsilons(vec![0.25])
        .with_events();
    let rec = simulate(&spec, ring(&p, n, 2.0, 3), &plan, &mut [], &mut stream_rng(3, 1)).unwrap();
    let log = rec.event_log.as_ref().unwrap();
    assert!(log.times_increasing());
    assert!(!log.events.is_empty());
    assert_eq!(log.replay().unwrap(), rec.final_state);
    let a = log.additive_functional(horizon).unwrap();
    assert!((a - rec.additive[0]).abs() < 1e-12);

    // block integral from the log
    let m = rec.blocks[0].block as i64;
    let mut s = log.initial.clone();
    let mut last = 0.0;
    let mut integral = 0.0;
    let block = |s: &LatticeState| (1..=m).map(|z| s.get(s.walker() + z) as f64).sum::<f64>();
    for e in &log.events {
        integral += block(&s) * (e.time - last);
        last = e.time;
        e.kind.apply(&mut s).unwrap();
    }
    integral += block(&s) * (horizon - last);
    assert!((integral - rec.blocks[0].integrals[0]).abs() < 1e-9);

    let walks = log
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Walk { .. }))
        .count() as u64;
    assert_eq!(walks, rec.counts.walks());
}

#[test]
fn residual_identity_holds_at_every_sample() {
    let p = Profile::step(0.8, 0.4).unwrap();
    let spec = DynamicsSpec::nearest_neighbor(25, rates(1.0, 2.0), 0.5);
    let times: Vec<f64> = (0..=20).map(|k| 0.025 * k as f64).collect();
    let plan = ObservationPlan::endpoint(0.5).with_sample_times(times);
    let rec = simulate(&spec, ring(&p, 25, 3.0, 2), &plan, &mut [], &mut stream_rng(2, 2)).unwrap();
    let m = rec.mtilde.as_ref().unwrap();
    assert_eq!(m.len(), rec.times.len());
    for (k, &mk) in m.iter().enumerate() {
        assert!((rec.x_over_n[k] - mk - rec.additive[k]).abs() < 1e-12);
        if k > 0 {
            let dt = rec.times[k] - rec.times[k - 1];
            assert!((rec.additive[k] - rec.additive[k - 1]).abs() <= dt + 1e-12);
        }
    }
}

#[test]
fn symmetric_rates_give_centred_displacement() {
    let p = Profile::step(0.7, 0.3).unwrap();
    let n = 20;
    let spec = DynamicsSpec::nearest_neighbor(n, rates(1.5, 1.5), 0.3);
    let plan = ObservationPlan::endpoint(0.3);
    let xs: Vec<f64> = (0..400)
        .map(|r| {
            let w = Window::symmetric(n, 3.0).unwrap();
            let mut rng = path_rng(77, &[r]);
            let s = sample_initial(&p, n, w, Boundary::Periodic, &mut rng).unwrap();
            simulate(&spec, s, &plan, &mut [], &mut rng).unwrap().final_x_over_n()
        })
        .collect();
    let m = Moments::from_slice(&xs);
    assert!(m.mean.abs() < 4.0 * m.stderr(), "mean {} stderr {}", m.mean, m.stderr());
}

#[test]
fn constant_profile_speed() {
    let rho = 0.3;
    let p = Profile::constant(rho).unwrap();
    let n = 40;
    let horizon = 0.5;
    let r = rates(2.0, 1.0);
    let spec = DynamicsSpec::nearest_neighbor(n, r, horizon);
    let plan = ObservationPlan::endpoint(horizon);
    let xs: Vec<f64> = (0..200)
        .map(|k| {
            let w = Window::symmetric(n, 4.0).unwrap();
            let mut rng = path_rng(78, &[k]);
            let s = sample_initial(&p, n, w, Boundary::Periodic, &mut rng).unwrap();
            simulate(&spec, s, &plan, &mut [], &mut rng).unwrap().final_x_over_n()
        })
        .collect();
    let m = Moments::from_slice(&xs);
    let expected = r.drift(rho) * horizon;
    assert!((m.mean - expected).abs() < 4.0 * m.stderr(), "{} vs {expected}", m.mean);
}

#[test]
fn event_counts_match_total_rates() {
    // four-site ring, n = 1: exchanges at total rate 4, walker at α + β
    let spec = DynamicsSpec::nearest_neighbor(1, rates(2.0, 1.0), 0.2);
    let plan = ObservationPlan::endpoint(0.2);
    let mut ex = Vec::new();
    let mut walks = Vec::new();
    for r in 0..10_000u64 {
        let mut rng = path_rng(79, &[r]);
        let s = LatticeState::periodic(-2, vec![1, 0, 1, 0], 0).unwrap();
        let rec = simulate(&spec, s, &plan, &mut [], &mut rng).unwrap();
        ex.push(rec.counts.exchanges as f64);
        walks.push(rec.counts.walks() as f64);
    }
    for (xs, rate) in [(&ex, 4.0 * 0.2), (&walks, 3.0 * 0.2)] {
        let m = Moments::from_slice(xs);
        let sigma = (rate / xs.len() as f64).sqrt();
        assert!((m.mean - rate).abs() < 4.0 * sigma, "mean {} vs {rate}", m.mean);
        assert!(
            (m.variance - rate).abs() < 0.1 * rate,
            "variance {} vs {rate}",
            m.variance
        );
    }
}

#[test]
fn frozen_environment_gives_zero_replacement_statistic() {
    let p = Profile::constant(1.0).unwrap();
    let n = 20;
    let spec = DynamicsSpec::nearest_neighbor(n, rates(1.0, 1.0), 0.5).with_exchange_multiplier(0.0);
    let plan = ObservationPlan::endpoint(0.5).with_epsilons(vec![0.1, 0.4]);
    let rec = simulate(&spec, ring(&p, n, 3.0, 4), &plan, &mut [], &mut stream_rng(4, 4)).unwrap();
    assert_eq!(rec.counts.exchanges, 0);
    for eps in [0.1, 0.4] {
        assert!(rec.replacement(eps, 0.5).unwrap().abs() < 1e-12);
    }
}

#[test]
fn replacement_statistic_is_bounded_by_t() {
    let p = Profile::step(1.0, 0.0).unwrap();
    let n = 30;
    let spec = DynamicsSpec::nearest_neighbor(n, rates(0.0, 4.0), 0.3);
    let times = vec![0.1, 0.2, 0.3];
    let plan = ObservationPlan::endpoint(0.3)
        .with_sample_times(times.clone())
        .with_epsilons(vec![0.05, 0.4]);
    let rec = simulate(&spec, ring(&p, n, 3.0, 6), &plan, &mut [], &mut stream_rng(6, 6)).unwrap();
    for &t in &times {
        for eps in [0.05, 0.4] {
            assert!(rec.replacement(eps, t).unwrap() <= t + 1e-12);
        }
    }
    assert!(rec.replacement(0.2, 0.3).is_err());
}

#[test]
fn epsilon_and_window_errors() {
    let p = Profile::constant(0.5).unwrap();
    let spec = DynamicsSpec::nearest_neighbor(10, rates(1.0, 1.0), 0.1);
    let too_small = ObservationPlan::endpoint(0.1).with_epsilons(vec![0.05]);
    let err = simulate(&spec, ring(&p, 10, 2.0, 1), &too_small, &mut [], &mut stream_rng(1, 2));
    assert!(matches!(err, Err(XwalkError::InvalidEpsilon(_))));
    let too_big = ObservationPlan::endpoint(0.1).with_epsilons(vec![3.0]);
    let err = simulate(&spec, ring(&p, 10, 2.0, 1), &too_big, &mut [], &mut stream_rng(1, 2));
    assert!(matches!(err, Err(XwalkError::InvalidEpsilon(_))));

    // a frozen window too small for the walker's excursion
    let w = Window::new(-6, 6).unwrap();
    let s = sample_initial(&p, 50, w, Boundary::FrozenProfile, &mut stream_rng(1, 3)).unwrap();
    let fast = DynamicsSpec::nearest_neighbor(50, rates(0.0, 5.0), 1.0);
    let err = simulate(
        &fast,
        s,
        &ObservationPlan::endpoint(1.0),
        &mut [],
        &mut stream_rng(1, 4),
    );
    assert!(matches!(err, Err(XwalkError::WindowExhausted { .. })));
}

#[test]
fn frozen_boundary_conserves_window_particles() {
    let p = Profile::step(0.9, 0.1).unwrap();
    let n = 20;
    let w = Window::symmetric(n, 3.0).unwrap();
    let s = sample_initial(&p, n, w, Boundary::FrozenProfile, &mut stream_rng(8, 0)).unwrap();
    let before = s.particle_count();
    let halos = (s.halos().0.to_vec(), s.halos().1.to_vec());
    let spec = DynamicsSpec::nearest_neighbor(n, rates(1.0, 1.0), 0.1);
    let rec = simulate(
        &spec,
        s,
        &ObservationPlan::endpoint(0.1),
        &mut [],
        &mut stream_rng(8, 1),
    )
    .unwrap();
    assert_eq!(rec.final_state.particle_count(), before);
    assert_eq!(rec.final_state.halos().0, &halos.0[..]);
    assert_eq!(rec.final_state.halos().1, &halos.1[..]);
}

struct Recorder {
    times: Vec<f64>,
    seen: Vec<(f64, usize, f64)>,
}

impl Observer for Recorder {
    fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    fn observe(&mut self, state: &LatticeState, totals: &RunningTotals) {
        self.seen.push((totals.time, state.particle_count(), totals.additive));
    }
}

#[test]
fn observers_see_their_times() {
    let p = Profile::constant(0.5).unwrap();
    let spec = DynamicsSpec::nearest_neighbor(10, rates(1.0, 2.0), 0.2);
    let mut obs = Recorder {
        times: vec![0.0, 0.05, 0.13],
        seen: Vec::new(),
    };
    let s = ring(&p, 10, 2.0, 9);
    let count = s.particle_count();
    simulate(
        &spec,
        s,
        &ObservationPlan::endpoint(0.2),
        &mut [&mut obs],
        &mut stream_rng(9, 1),
    )
    .unwrap();
    let ts: Vec<f64> = obs.seen.iter().map(|s| s.0).collect();
    assert_eq!(ts, vec![0.0, 0.05, 0.13]);
    assert!(obs.seen.iter().all(|s| s.1 == count && s.2.abs() <= s.0 + 1e-12));
}

#[test]
fn speed_change_conserves_particles() {
    let p = Profile::step(0.8, 0.2).unwrap();
    let spec = DynamicsSpec::nearest_neighbor(20, rates(1.0, 1.0), 0.2).with_exclusion(Exclusion::SpeedChange {
        rate: LocalFunction::gradient_speed_change(1.0).unwrap(),
    });
    let s = ring(&p, 20, 3.0, 10);
    let before = s.particle_count();
    let rec = simulate(
        &spec,
        s,
        &ObservationPlan::endpoint(0.2),
        &mut [],
        &mut stream_rng(10, 1),
    )
    .unwrap();
    assert_eq!(rec.final_state.particle_count(), before);
    // about a third of the proposals of rate 3n² per bond are real exchanges at density ~1/2
    let frac = rec.counts.exchanges as f64 / rec.counts.proposals as f64;
    assert!(frac > 0.4 && frac < 0.8, "{frac}");
}

#[test]
fn constant_time_change_fires_at_threshold() {
    let p = Profile::constant(0.5).unwrap();
    let n = 10;
    let spec = DynamicsSpec::nearest_neighbor(n, rates(1.0, 1.0), 1.0)
        .with_long_range(vec![(1, LocalFunction::constant(2.0).unwrap())]);
    let plan = ObservationPlan::endpoint(1.0).with_macro_clock(MacroClock::TimeChange { thresholds: vec![0.37] }, true);
    let rec = simulate(&spec, ring(&p, n, 20.0, 11), &plan, &mut [], &mut stream_rng(11, 1)).unwrap();
    let j = rec.first_macro_jump.unwrap();
    assert!((j.time - 0.37).abs() < 1e-12);
    assert_eq!(j.z, 1);
    assert_eq!(rec.stopped_at, Some(j.time));

    let late = ObservationPlan::endpoint(1.0).with_macro_clock(MacroClock::TimeChange { thresholds: vec![3.0] }, true);
    let rec = simulate(&spec, ring(&p, n, 20.0, 11), &late, &mut [], &mut stream_rng(11, 1)).unwrap();
    assert!(rec.first_macro_jump.is_none());
    assert_eq!(rec.times, vec![1.0]);
}

#[test]
fn uniformized_macro_jumps_move_by_n_z() {
    let p = Profile::constant(0.5).unwrap();
    let n = 10;
    let spec = DynamicsSpec::nearest_neighbor(n, rates(1.0, 1.0), 0.5)
        .with_long_range(vec![(2, LocalFunction::constant(3.0).unwrap())]);
    let plan = ObservationPlan::endpoint(0.5).with_events();
    let rec = simulate(&spec, ring(&p, n, 40.0, 12), &plan, &mut [], &mut stream_rng(12, 1)).unwrap();
    let log = rec.event_log.unwrap();
    let jumps: Vec<_> = log
        .events
        .iter()
        .filter_map(|e| match e.kind {
            EventKind::MacroJump { z, displacement } => Some((z, displacement)),
            _ => None,
        })
        .collect();
    assert_eq!(jumps.len() as u64, rec.counts.macro_jumps);
    assert!(jumps.iter().all(|&(z, d)| z == 2 && d == 20));
}

#[test]
fn general_walker_matches_nearest_neighbour_in_mean() {
    let rho = 0.3;
    let p = Profile::constant(rho).unwrap();
    let n = 30;
    let r = rates(2.0, 1.0);
    let general = DynamicsSpec {
        walker: WalkerSpec::General {
            jumps: r.as_jump_table(),
        },
        ..DynamicsSpec::nearest_neighbor(n, r, 0.5)
    };
    let plan = ObservationPlan::endpoint(0.5);
    let xs: Vec<f64> = (0..300)
        .map(|k| {
            let mut rng = path_rng(80, &[k]);
            let w = Window::symmetric(n, 4.0).unwrap();
            let s = sample_initial(&p, n, w, Boundary::Periodic, &mut rng).unwrap();
            simulate(&general, s, &plan, &mut [], &mut rng)
                .unwrap()
                .final_x_over_n()
        })
        .collect();
    let m = Moments::from_slice(&xs);
    assert!((m.mean - r.drift(rho) * 0.5).abs() < 4.0 * m.stderr());
}
