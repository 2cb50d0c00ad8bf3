//! A straight coupling need not be optimal: the quarter-turn rotation of
//! `N(0, I)` has straight rectified flow, cost 2, and a c-rectify step that
//! removes almost all of it.
//!
//! Run with `cargo run --release --example rotation_counterexample`.

use riftort::cli::{counterexample, counterexample_features};
use riftort::flow::IntegratorConfig;
use riftort::training::FitConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let o = counterexample(
        5,
        2000,
        &counterexample_features(),
        &FitConfig::default(),
        &IntegratorConfig::default(),
    )?;
    println!("normalized straightness gap {:.2e}", o.normalized_gap);
    println!("cost before c-rectify       {:.4}", o.transport_cost);
    println!("cost after c-rectify        {:.4}", o.rectified_cost);
    println!("ell* + S                    {:.4}", o.predicted_reduction());
    println!("measured reduction          {:.4}", o.reduction());
    Ok(())
}
