//! c-reflow under the non-quadratic cost `|x|^1.5 / 1.5`.
//!
//! The potential has no closed form here and is fitted by preconditioned
//! full-batch descent; the cost sequence still decreases toward the sorted
//! pairing's cost.
//!
//! Run with `cargo run --release --example power_cost_1d`.

use riftort::costs::CostFunction;
use riftort::diagnostics::oracle_quantile_1d;
use riftort::flow::{reflow, FeatureSpec, IntegratorConfig, ReflowOptions};
use riftort::synthdata::{derive_seed, independent_coupling, sample, DistributionSpec};
use riftort::training::FitConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = CostFunction::power(1.5)?;
    let s0: DistributionSpec = "gaussian:mean=0;cov=1".parse()?;
    let s1: DistributionSpec = "gaussian:mean=2;cov=1".parse()?;
    let seed = 3;
    let a = sample(&s0, 1000, derive_seed(seed, "source", 0))?;
    let b = sample(&s1, 1000, derive_seed(seed, "target", 0))?;
    let cpl = independent_coupling(&a, &b, derive_seed(seed, "pairing", 0))?;
    let features = FeatureSpec { num_features: 128, ..FeatureSpec::default() };
    let report = reflow(
        &cpl,
        &c,
        2,
        &features,
        &FitConfig::default(),
        &IntegratorConfig::default(),
        &ReflowOptions { seed, references: None },
    )?;
    println!("sorted-pairing optimum {:.4}", oracle_quantile_1d(&a, &b, &c)?);
    for (k, cost) in report.cost_sequence().iter().enumerate() {
        println!("k = {k}: cost {cost:.4}");
    }
    for r in &report.records {
        println!(
            "k = {}: descent iterations {}, converged {}, ell* {:.3e}",
            r.k, r.fit.iterations, r.fit.converged, r.ellstar
        );
    }
    Ok(())
}
