//! Statistical checks that a flow keeps the marginals of its input coupling.
//!
//! The energy distance of the transported samples is compared with the
//! distance between two fresh same-size draws. The weak-form test probes the
//! continuity equation with random test functions.
//!
//! Run with `cargo run --release --example marginal_preservation`.

use riftort::costs::CostFunction;
use riftort::diagnostics::{interpolation_slices, marginal_preservation, MarginalReferences};
use riftort::fields::{PotentialDrift, ResidualField};
use riftort::flow::{c_rectify, FeatureSpec, IntegratorConfig};
use riftort::synthdata::{derive_seed, independent_coupling, sample, DistributionSpec};
use riftort::training::{fit_free_field, FitConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = CostFunction::Quadratic;
    let source = DistributionSpec::standard_normal(2);
    let target: DistributionSpec = "uniform:lo=-2,-2;hi=2,2".parse()?;
    let (n, seed) = (2000, 17);
    let a = sample(&source, n, derive_seed(seed, "source", 0))?;
    let b = sample(&target, n, derive_seed(seed, "target", 0))?;
    let cpl = independent_coupling(&a, &b, derive_seed(seed, "pairing", 0))?;

    let fit = FitConfig::default();
    let fm = FeatureSpec { num_features: 256, ..FeatureSpec::default() }.build(&cpl, fit.time_points, 1)?;
    let out = c_rectify(&cpl, &q, &fm, &fit, &IntegratorConfig::default())?;

    let refs = MarginalReferences::draw(&source, &target, n, 4, derive_seed(seed, "references", 0))?;
    println!("source: energy distance {:.3e} vs baseline {:.3e}", refs.distance0(&out.coupling.x0), refs.baseline0);
    println!("target: energy distance {:.3e} vs baseline {:.3e}", refs.distance1(&out.coupling.x1), refs.baseline1);

    // The residual between the free velocity fit and the potential drift
    // should carry no net mass flux along the interpolation.
    let (free, _) = fit_free_field(&cpl, &fm, &fit)?;
    let residual = ResidualField {
        free: &free,
        drift: PotentialDrift { potential: &out.potential, cost: &q },
    };
    let slices = interpolation_slices(&cpl, fit.time_points);
    let stat = marginal_preservation(&residual, &slices, 16, 99)?;
    println!("weak-form residual statistic {stat:.3e}");
    Ok(())
}
