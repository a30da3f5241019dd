//! One run of the walker started at a density step.

use xwalk_core::kmc::{simulate, DynamicsSpec, ObservationPlan};
use xwalk_core::lattice::{sample_initial, Boundary, Profile, ProfileShape, WalkerRates, Window};
use xwalk_core::rng::stream_rng;

fn main() -> xwalk_core::Result<()> {
    let n = 100;
    let profile = Profile::new(ProfileShape::Step { left: 0.8, right: 0.4 }, 0.4)?;
    let spec = DynamicsSpec::nearest_neighbor(n, WalkerRates::new(1.0, 2.0)?, 0.5);
    let window = Window::symmetric(n, 4.0)?;
    let initial = sample_initial(&profile, n, window, Boundary::FrozenProfile, &mut stream_rng(7, 0))?;
    let plan = ObservationPlan::endpoint(0.5);
    let record = simulate(&spec, initial, &plan, &mut [], &mut stream_rng(7, 1))?;
    println!("x_T/n = {}", record.final_x_over_n());
    Ok(())
}
