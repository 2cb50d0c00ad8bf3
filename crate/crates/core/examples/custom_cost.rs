//! Plugging a user-defined convex cost into c-rectify.
//!
//! `c(x) = ½ Σ a_i x_i²` has conjugate `½ Σ y_i² / a_i`; the weights repeat
//! cyclically so the cost is defined in every dimension. The property
//! checks in `selftest` accept any `ConvexCost`, so a new cost can be
//! validated before it is used.
//!
//! Run with `cargo run --release --example custom_cost`.

use riftort::costs::ConvexCost;
use riftort::diagnostics::transport_cost;
use riftort::flow::{c_rectify, FeatureSpec, IntegratorConfig};
use riftort::selftest::cost_properties;
use riftort::synthdata::{independent_coupling, sample, DistributionSpec};
use riftort::training::FitConfig;

struct Anisotropic {
    a: Vec<f64>,
}

impl Anisotropic {
    fn weights(&self) -> impl Iterator<Item = &f64> {
        self.a.iter().cycle()
    }
}

impl ConvexCost for Anisotropic {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(self.weights()).map(|(v, a)| a * v * v).sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), a) in out.iter_mut().zip(x).zip(self.weights()) {
            *o = a * v;
        }
    }

    fn conjugate(&self, y: &[f64]) -> f64 {
        0.5 * y.iter().zip(self.weights()).map(|(v, a)| v * v / a).sum::<f64>()
    }

    fn conjugate_gradient_into(&self, y: &[f64], out: &mut [f64]) {
        for ((o, v), a) in out.iter_mut().zip(y).zip(self.weights()) {
            *o = v / a;
        }
    }

    fn describe(&self) -> String {
        format!("anisotropic{:?}", self.a)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Anisotropic { a: vec![1.0, 4.0] };
    for r in cost_properties(&c) {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }

    let s0 = sample(&DistributionSpec::standard_normal(2), 1500, 1)?;
    let s1 = sample(&"gaussian:mean=1,1;cov=diag(1,0.25)".parse()?, 1500, 2)?;
    let cpl = independent_coupling(&s0, &s1, 3)?;
    let fit = FitConfig::default();
    let fm = FeatureSpec { num_features: 128, ..FeatureSpec::default() }.build(&cpl, fit.time_points, 4)?;
    let out = c_rectify(&cpl, &c, &fm, &fit, &IntegratorConfig::default())?;
    println!(
        "cost {:.4} -> {:.4} after one c-rectify step (ell* {:.3e})",
        transport_cost(&cpl, &c),
        transport_cost(&out.coupling, &c),
        out.report.final_loss
    );
    Ok(())
}
