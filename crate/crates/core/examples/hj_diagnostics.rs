//! Hamilton-Jacobi diagnostics of a fitted potential.
//!
//! An optimal potential solves `f_t + c*(grad f) = 0`; its residual and the
//! Hopf-Lax consistency gap measure how far a fit is from that.
//!
//! Run with `cargo run --release --example hj_diagnostics`.

use riftort::costs::CostFunction;
use riftort::diagnostics::{hj_residual, hopflax_gap, Lattice};
use riftort::flow::{c_rectify, FeatureSpec, IntegratorConfig};
use riftort::synthdata::{derive_seed, independent_coupling, sample, DistributionSpec};
use riftort::training::FitConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = CostFunction::Quadratic;
    let s0: DistributionSpec = "gaussian:mean=0;cov=1".parse()?;
    let s1: DistributionSpec = "gaussian:mean=2;cov=1".parse()?;
    let seed = 13;
    let a = sample(&s0, 2000, derive_seed(seed, "source", 0))?;
    let b = sample(&s1, 2000, derive_seed(seed, "target", 0))?;
    let mut cpl = independent_coupling(&a, &b, derive_seed(seed, "pairing", 0))?;

    let fit = FitConfig::default();
    let spec = FeatureSpec { num_features: 256, ..FeatureSpec::default() };
    let points: Vec<(Vec<f64>, f64)> = (0..=10)
        .flat_map(|i| (0..=4).map(move |j| (vec![-1.0 + 0.4 * i as f64], 0.1 + 0.2 * j as f64)))
        .collect();
    let probes: Vec<Vec<f64>> = (0..9).map(|i| vec![0.5 + 0.25 * i as f64]).collect();
    let grid = Lattice { lo: vec![-4.0], hi: vec![4.0], points: 801 };

    // The second fit starts from an almost optimal coupling, so its potential
    // should satisfy the equation much better than the first.
    for k in 1..=2 {
        let fm = spec.build(&cpl, fit.time_points, derive_seed(seed, "features", k))?;
        let out = c_rectify(&cpl, &q, &fm, &fit, &IntegratorConfig::default())?;
        let (mean, max) = hj_residual(&out.potential, &q, &points)?;
        let gap = hopflax_gap(&out.potential, &q, 1.0, &probes, &grid)?;
        println!(
            "step {k}: ell* {:.3e}, HJ residual mean {mean:.3e} max {max:.3e}, Hopf-Lax gap {gap:.3e}",
            out.report.final_loss
        );
        cpl = out.coupling;
    }
    Ok(())
}
