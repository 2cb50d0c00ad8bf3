//! Saving a fitted potential to the text field format and reloading it.
//!
//! Run with `cargo run --release --example stored_fields`.

use riftort::costs::CostFunction;
use riftort::fields::StoredField;
use riftort::flow::FeatureSpec;
use riftort::synthdata::{independent_coupling, sample, DistributionSpec};
use riftort::training::{fit_potential, FitConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s0 = sample(&DistributionSpec::standard_normal(1), 500, 1)?;
    let s1 = sample(&"gaussian:mean=1;cov=0.5".parse()?, 500, 2)?;
    let cpl = independent_coupling(&s0, &s1, 3)?;
    let fit = FitConfig::default();
    let fm = FeatureSpec { num_features: 64, ..FeatureSpec::default() }.build(&cpl, fit.time_points, 4)?;
    let (pf, _) = fit_potential(&cpl, &fm, &CostFunction::Quadratic, &fit)?;

    let path = std::env::temp_dir().join("riftort_example_potential.field");
    std::fs::write(&path, pf.to_text())?;
    let text = std::fs::read_to_string(&path)?;
    println!("{}", text.lines().next().unwrap_or_default());

    let StoredField::Potential(back) = StoredField::parse(&text)? else {
        return Err("expected a potential".into());
    };
    // Values print with 17 significant digits, so the reload is exact.
    for x in [-1.0, 0.0, 1.0] {
        assert_eq!(pf.value(&[x], 0.5), back.value(&[x], 0.5));
        println!("f({x:+.1}, 0.5) = {:.12} after reload", back.value(&[x], 0.5));
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
