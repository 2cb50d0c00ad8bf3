//! Three optimal-transport oracles on the same Gaussian pair: sorted
//! pairing, exact assignment, and the Gaussian closed form.
//!
//! Run with `cargo run --release --example oracle_comparison`.

use riftort::costs::CostFunction;
use riftort::diagnostics::{
    oracle_gauss_quadratic, oracle_hungarian, oracle_quantile_1d, HungarianReplicates,
};
use riftort::synthdata::{sample, DistributionSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = CostFunction::Quadratic;
    let s0: DistributionSpec = "gaussian:mean=0;cov=1".parse()?;
    let s1: DistributionSpec = "gaussian:mean=2;cov=1".parse()?;
    let exact = oracle_gauss_quadratic(&[0.0], &[vec![1.0]], &[2.0], &[vec![1.0]])?;
    println!("closed form {exact:.4}");
    println!("    n   quantile  hungarian");
    for n in [32, 128, 512] {
        let a = sample(&s0, n, 1)?;
        let b = sample(&s1, n, 2)?;
        let (h, _) = oracle_hungarian(&a, &b, &q)?;
        println!("{n:5} {:10.4} {h:10.4}", oracle_quantile_1d(&a, &b, &q)?);
    }
    let reps = HungarianReplicates::draw(&s0, &s1, &q, 512, 8, 3)?;
    let (lo, hi) = reps.range();
    println!("mean of 8 assignment solves at n = 512: {:.4} (range {lo:.4}..{hi:.4})", reps.mean());

    // Non-quadratic costs have no Gaussian closed form, but in 1D the
    // sorted pairing stays optimal for every convex cost.
    let p = CostFunction::power(1.5)?;
    let a = sample(&s0, 256, 4)?;
    let b = sample(&s1, 256, 5)?;
    println!(
        "power:1.5 at n = 256: quantile {:.6}, hungarian {:.6}",
        oracle_quantile_1d(&a, &b, &p)?,
        oracle_hungarian(&a, &b, &p)?.0
    );
    Ok(())
}
