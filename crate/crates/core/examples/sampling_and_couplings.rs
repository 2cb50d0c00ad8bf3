//! Seeded sampling, couplings and the linear interpolation between them.
//!
//! Run with `cargo run --example sampling_and_couplings`.

use ndarray::Axis;
use riftort::costs::CostFunction;
use riftort::diagnostics::transport_cost;
use riftort::synthdata::{
    derive_seed, independent_coupling, interpolate, rotation_coupling, sample, time_grid,
    DistributionSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source: DistributionSpec = "gaussian:mean=0,0;cov=I".parse()?;
    let target: DistributionSpec =
        "mixture:weights=0.5,0.5;means=-2,0|2,0;covs=0.25|0.25".parse()?;
    println!("source {source}\ntarget {target}");

    // Every stream is derived from one base seed and a label.
    let seed = 42;
    let s0 = sample(&source, 1000, derive_seed(seed, "source", 0))?;
    let s1 = sample(&target, 1000, derive_seed(seed, "target", 0))?;
    let cpl = independent_coupling(&s0, &s1, derive_seed(seed, "pairing", 0))?;
    let q = CostFunction::Quadratic;
    println!("independent coupling cost {:.4}", transport_cost(&cpl, &q));

    for t in time_grid(4) {
        let (xt, vt) = interpolate(&cpl, t)?;
        let speed = vt.rows().into_iter().map(|r| r.dot(&r).sqrt()).sum::<f64>() / vt.nrows() as f64;
        let mean = xt.mean_axis(Axis(0)).expect("nonempty").to_vec();
        println!("t = {t:.3}: mean X_t = {mean:.3?}, mean |X1 - X0| = {speed:.3}");
    }

    let rot = rotation_coupling(&s0, std::f64::consts::FRAC_PI_2)?;
    println!("quarter-turn rotation coupling cost {:.4}", transport_cost(&rot, &q));
    Ok(())
}
