//! Events per second of the event loop on a 2001-site ring.
//!
//! cargo run --release -p xwalk-core --example throughput

use std::time::Instant;

use xwalk_core::kmc::{simulate, DynamicsSpec, ObservationPlan};
use xwalk_core::lattice::{sample_initial, Boundary, Profile, WalkerRates, Window};
use xwalk_core::rng::stream_rng;

fn main() {
    let n = 250;
    let spec = DynamicsSpec::nearest_neighbor(n, WalkerRates::new(2.0, 1.0).unwrap(), 0.5);
    let window = Window::new(-1000, 1000).unwrap();
    let profile = Profile::constant(0.3).unwrap();
    let plan = ObservationPlan::endpoint(spec.horizon).with_epsilons(vec![0.05, 0.1, 0.2, 0.4]);
    let mut rng = stream_rng(11, 0);
    let state = sample_initial(&profile, n, window, Boundary::Periodic, &mut rng).unwrap();
    let start = Instant::now();
    let rec = simulate(&spec, state, &plan, &mut [], &mut rng).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let events = rec.counts.proposals as f64;
    println!(
        "{events:.3e} events in {secs:.3} s: {:.3e} events/s, x/n = {:.4}",
        events / secs,
        rec.final_x_over_n()
    );
}
