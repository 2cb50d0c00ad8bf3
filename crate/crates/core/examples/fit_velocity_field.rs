//! Random-Fourier-feature velocity fit against a known expected velocity.
//!
//! For the independent coupling of two standard normals the expected
//! velocity is `x (2t - 1) / (t^2 + (1 - t)^2)`.
//!
//! Run with `cargo run --release --example fit_velocity_field`.

use riftort::fields::VelocityField;
use riftort::flow::FeatureSpec;
use riftort::synthdata::{derive_seed, independent_coupling, sample, DistributionSpec};
use riftort::training::{fit_free_field, FitConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let law = DistributionSpec::standard_normal(1);
    let seed = 7;
    let a = sample(&law, 4000, derive_seed(seed, "source", 0))?;
    let b = sample(&law, 4000, derive_seed(seed, "target", 0))?;
    let cpl = independent_coupling(&a, &b, derive_seed(seed, "pairing", 0))?;

    let fit = FitConfig::default();
    let spec = FeatureSpec { num_features: 512, ..FeatureSpec::default() };
    let fm = spec.build(&cpl, fit.time_points, derive_seed(seed, "features", 0))?;
    println!("features: {} columns, bandwidth_x = {:.3}", fm.len(), fm.bandwidth_x);

    let (field, report) = fit_free_field(&cpl, &fm, &fit)?;
    // The residual of a free fit is the irreducible conditional variance.
    println!("fit loss {:.4} (independent normals give pi/2 = {:.4})", report.final_loss, std::f64::consts::FRAC_PI_2);

    println!("   t     x    fitted    exact");
    for t in [0.1, 0.5, 0.9] {
        for x in [-1.5, 0.0, 1.5] {
            let exact = x * (2.0 * t - 1.0) / (t * t + (1.0 - t) * (1.0 - t));
            println!("{t:5.2} {x:5.2} {:9.4} {exact:8.4}", field.velocity(&[x], t)[0]);
        }
    }
    Ok(())
}
