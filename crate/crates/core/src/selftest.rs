//! Property suite behind the `selftest` subcommand. Each check returns a
//! [`PropertyResult`]; checks on a single cost accept any [`ConvexCost`] so
//! deliberately broken implementations can be fed through them.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::costs::{ConvexCost, CostFunction};
use crate::diagnostics::{
    energy_distance, energy_distance_views, oracle_gauss_quadratic, oracle_hungarian,
    oracle_quantile_1d, pathwise_cost, straightness, transport_cost, HungarianReplicates, MarginalReferences, HUNGARIAN_MAX_N,
};
use crate::fields::{build_features, FnField, PotentialField, VelocityField};
use crate::flow::{integrate, reflow, FeatureSpec, IntegratorConfig, IntegratorMethod, ReflowOptions, Trajectory};
use crate::synthdata::{
    derive_seed, independent_coupling, interpolate, rng_from_seed, rotation_coupling, sample,
    DistributionSpec, PairedCoupling, SampleSet,
};
use crate::training::{fit_free_field, fit_potential, matching_loss, FitConfig};

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl PropertyResult {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        PropertyResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    fn from_error(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        PropertyResult::new(name, false, format!("error: {err}"))
    }
}

fn label(c: &dyn ConvexCost, e: &str) -> String {
    format!("{e} [{}]", c.describe())
}

fn gaussian_vec(rng: &mut impl Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `matching(c, x, y) ≥ −1e−12` on 10⁴ random pairs in dimensions 1 to 3.
pub fn fenchel_young(c: &dyn ConvexCost) -> PropertyResult {
    let mut rng = rng_from_seed(11);
    let mut worst = f64::INFINITY;
    for i in 0..10_000 {
        let d = 1 + i % 3;
        let x = gaussian_vec(&mut rng, d, 2.0);
        let y = gaussian_vec(&mut rng, d, 2.0);
        worst = worst.min(c.matching(&x, &y));
    }
    PropertyResult::new(
        label(c, "fenchel_young_nonnegative"),
        worst >= -1e-12,
        format!("min matching over 1e4 pairs = {worst:.3e}"),
    )
}

/// `c*(y)` against `max_x xᵀy − c(x)` on a grid of spacing 1e−3 around the
/// analytic maximizer, in 1D and 2D.
pub fn conjugate_brute_force(c: &dyn ConvexCost) -> PropertyResult {
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for &y in &[-2.0, -0.7, 0.0, 0.4, 1.6] {
        let star = c.conjugate_gradient(&[y])[0];
        let radius = star.abs() + 1.0;
        let steps = (2.0 * radius / h).ceil() as usize;
        let best = (0..=steps)
            .map(|i| {
                let x = star - radius + i as f64 * h;
                x * y - c.value(&[x])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max((c.conjugate(&[y]) - best).abs());
    }
    for y in [[0.8, -0.5], [-1.2, 1.1], [0.0, 0.3]] {
        let star = c.conjugate_gradient(&y);
        let half = 0.25;
        let steps = (2.0 * half / h).round() as usize;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = [star[0] - half + i as f64 * h, star[1] - half + j as f64 * h];
                best = best.max(x[0] * y[0] + x[1] * y[1] - c.value(&x));
            }
        }
        worst = worst.max((c.conjugate(&y) - best).abs());
    }
    PropertyResult::new(
        label(c, "conjugate_matches_grid_search"),
        worst <= 1e-3,
        format!("max |c* - grid sup| = {worst:.3e}"),
    )
}

fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            y[k] = x[k] + h;
            let up = f(&y);
            y[k] = x[k] - h;
            let down = f(&y);
            y[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    diff / scale
}

/// `∇c` and `∇c*` against central differences (`h = 1e−5`) away from the
/// origin; relative error ≤ 1e−6.
pub fn gradient_check(c: &dyn ConvexCost) -> PropertyResult {
    let mut rng = rng_from_seed(12);
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    while trials < 200 {
        let d = 1 + trials % 3;
        let x = gaussian_vec(&mut rng, d, 1.5);
        if x.iter().map(|v| v * v).sum::<f64>() < 0.25 {
            continue;
        }
        trials += 1;
        worst = worst.max(rel_err(&c.gradient(&x), &fd_gradient(|z| c.value(z), &x, 1e-5)));
        worst = worst.max(rel_err(
            &c.conjugate_gradient(&x),
            &fd_gradient(|z| c.conjugate(z), &x, 1e-5),
        ));
    }
    PropertyResult::new(
        label(c, "gradients_match_finite_differences"),
        worst <= 1e-6,
        format!("max relative error = {worst:.3e}"),
    )
}

/// `matching(c, x, y) = bregman(c, x, ∇c*(y))` within 1e−9.
pub fn bregman_matching_equivalence(c: &dyn ConvexCost) -> PropertyResult {
    let mut rng = rng_from_seed(13);
    let mut worst: f64 = 0.0;
    for i in 0..2000 {
        let d = 1 + i % 3;
        let x = gaussian_vec(&mut rng, d, 1.0);
        let y = gaussian_vec(&mut rng, d, 1.0);
        let b = c.bregman(&x, &c.conjugate_gradient(&y));
        worst = worst.max((c.matching(&x, &y) - b).abs());
    }
    PropertyResult::new(
        label(c, "matching_equals_bregman"),
        worst <= 1e-9,
        format!("max difference = {worst:.3e}"),
    )
}

fn small_coupling(d: usize, n: usize, seed: u64) -> crate::error::Result<PairedCoupling> {
    let s0 = sample(&DistributionSpec::standard_normal(d), n, derive_seed(seed, "s0", 0))?;
    let s1 = sample(&DistributionSpec::standard_normal(d), n, derive_seed(seed, "s1", 0))?;
    let shifted = SampleSet::from_data(&s1.data + 1.0)?;
    independent_coupling(&s0, &shifted, derive_seed(seed, "pair", 0))
}

/// Chord inequality of the matching loss in `θ` on random parameter pairs.
pub fn matching_loss_convexity(c: &dyn ConvexCost) -> PropertyResult {
    let name = label(c, "matching_loss_convex_in_theta");
    let run = || -> crate::error::Result<f64> {
        let cpl = small_coupling(2, 200, 14)?;
        let fm = build_features(2, 24, 1.5, 0.5, 3)?.with_affine(true);
        let mut rng = rng_from_seed(15);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..10 {
            let a = Array1::from_iter((0..fm.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let b = Array1::from_iter((0..fm.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let la = matching_loss(&cpl, &PotentialField::new(fm.clone(), a.clone())?, c, 4)?;
            let lb = matching_loss(&cpl, &PotentialField::new(fm.clone(), b.clone())?, c, 4)?;
            for w in [0.25, 0.5, 0.75] {
                let mid = &a * w + &b * (1.0 - w);
                let lm = matching_loss(&cpl, &PotentialField::new(fm.clone(), mid)?, c, 4)?;
                worst = worst.max(lm - (w * la + (1.0 - w) * lb));
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(v) => PropertyResult::new(name, v <= 1e-10, format!("max chord violation = {v:.3e}")),
        Err(e) => PropertyResult::from_error(name, e),
    }
}

/// On a two-point support the empirical matching loss equals the matching
/// loss at the empirical conditional mean plus the conditional Bregman
/// variance, for any potential.
pub fn pythagorean_two_point(c: &dyn ConvexCost) -> PropertyResult {
    let name = label(c, "pythagorean_identity_two_point");
    let run = || -> crate::error::Result<f64> {
        // all four pairings of {(-1,0),(1,0)} → {(1,0.5),(-1,0.5)} with unequal counts;
        // at t = ½ two pairings meet at (0, 0.25)
        let src = [[-1.0, 0.0], [1.0, 0.0]];
        let dst = [[1.0, 0.5], [-1.0, 0.5]];
        let counts = [[3usize, 2], [1, 4]];
        let mut x0 = Vec::new();
        let mut x1 = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                for _ in 0..counts[i][j] {
                    x0.extend_from_slice(&src[i]);
                    x1.extend_from_slice(&dst[j]);
                }
            }
        }
        let n = x0.len() / 2;
        let cpl = PairedCoupling::new(
            Array2::from_shape_vec((n, 2), x0).expect("shape"),
            Array2::from_shape_vec((n, 2), x1).expect("shape"),
        )?;
        let time_points = 3;
        let fm = build_features(2, 16, 1.0, 0.5, 21)?.with_affine(true);
        let mut rng = rng_from_seed(22);
        let theta = Array1::from_iter((0..fm.len()).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)));
        let pf = PotentialField::new(fm, theta)?;
        let lhs = matching_loss(&cpl, &pf, c, time_points)?;

        let vel = cpl.displacements();
        let mut rhs = 0.0;
        for t in crate::synthdata::time_grid(time_points) {
            let (xt, _) = interpolate(&cpl, t)?;
            for i in 0..n {
                let xi = xt.row(i).to_vec();
                let group: Vec<usize> = (0..n).filter(|&j| xt.row(j).to_vec() == xi).collect();
                let mut mean = vec![0.0; 2];
                for &j in &group {
                    for k in 0..2 {
                        mean[k] += vel[[j, k]] / group.len() as f64;
                    }
                }
                let u = pf.gradient(&xi, t);
                rhs += c.matching(&mean, &u) + c.bregman(&vel.row(i).to_vec(), &mean);
            }
        }
        rhs /= (n * time_points) as f64;
        Ok((lhs - rhs).abs())
    };
    match run() {
        Ok(v) => PropertyResult::new(name, v <= 1e-9, format!("|L - (Bregman + variance)| = {v:.3e}")),
        Err(e) => PropertyResult::from_error(name, e),
    }
}

/// Every check that takes a single cost.
pub fn cost_properties(c: &dyn ConvexCost) -> Vec<PropertyResult> {
    vec![
        fenchel_young(c),
        conjugate_brute_force(c),
        gradient_check(c),
        bregman_matching_equivalence(c),
        matching_loss_convexity(c),
        pythagorean_two_point(c),
    ]
}

fn rk4_order() -> PropertyResult {
    let lin = FnField::new(1, |x: &[f64], _| vec![x[0]]);
    let name = "rk4_reaches_e";
    match integrate(&lin, &ndarray::array![[1.0]], &IntegratorConfig::default()) {
        Ok(tr) => {
            let err = (tr.end()[[0, 0]] - std::f64::consts::E).abs();
            PropertyResult::new(name, err <= 1e-8, format!("|x(1) - e| = {err:.3e}"))
        }
        Err(e) => PropertyResult::from_error(name, e),
    }
}

fn coupling_properties() -> Vec<PropertyResult> {
    let mut out = Vec::new();
    let run = || -> crate::error::Result<Vec<PropertyResult>> {
        let mut v = Vec::new();
        let s0 = sample(&DistributionSpec::standard_normal(2), 500, 31)?;
        let s1 = sample(&"uniform:lo=-1;hi=2".parse::<DistributionSpec>()?, 500, 32)?;
        let s1 = SampleSet::from_data(ndarray::concatenate![
            ndarray::Axis(1),
            s1.data,
            s1.data.mapv(|a| a * 0.5)
        ])?;
        let cpl = independent_coupling(&s0, &s1, 33)?;
        let sorted = |a: &Array2<f64>| {
            let mut rows: Vec<Vec<f64>> = a.rows().into_iter().map(|r| r.to_vec()).collect();
            rows.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
            rows
        };
        v.push(PropertyResult::new(
            "independent_coupling_permutes_rows",
            sorted(&cpl.x0) == sorted(&s0.data) && sorted(&cpl.x1) == sorted(&s1.data),
            "marginal multisets compared row by row",
        ));

        let mut worst: f64 = 0.0;
        let swapped = cpl.swapped();
        for t in [0.0, 0.1, 0.37, 0.5, 0.9, 1.0] {
            let (a, _) = interpolate(&cpl, t)?;
            let (b, _) = interpolate(&swapped, 1.0 - t)?;
            worst = worst.max((&a - &b).mapv(f64::abs).fold(0.0, |m: f64, &x| m.max(x)));
        }
        v.push(PropertyResult::new(
            "interpolation_swap_symmetry",
            worst <= 1e-15,
            format!("max difference = {worst:.3e}"),
        ));

        let g = DistributionSpec::standard_normal(2);
        let base = sample(&g, 2000, 34)?;
        let rot = rotation_coupling(&base, 1.1)?;
        let fresh = sample(&g, 2000, 35)?;
        let other = sample(&g, 2000, 36)?;
        let e = energy_distance_views(rot.x1.view(), fresh.data.view())?;
        let baseline = energy_distance(&other, &fresh)?;
        v.push(PropertyResult::new(
            "rotation_coupling_preserves_target_law",
            e <= 2.0 * baseline,
            format!("energy distance {e:.3e} vs baseline {baseline:.3e}"),
        ));
        Ok(v)
    };
    match run() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(PropertyResult::from_error("coupling_properties", e)),
    }
    out
}

fn field_properties() -> Vec<PropertyResult> {
    let mut out = Vec::new();
    let run = || -> crate::error::Result<Vec<PropertyResult>> {
        let mut v = Vec::new();
        let fm = build_features(2, 64, 1.0, 0.5, 41)?;
        let mut rng = rng_from_seed(42);
        let theta = Array1::from_iter((0..fm.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let bound = std::f64::consts::SQRT_2 * theta.dot(&theta).sqrt();
        let pf = PotentialField::new(fm, theta)?;
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let x = gaussian_vec(&mut rng, 2, 3.0);
            let t: f64 = rng.random();
            worst = worst.max(pf.value(&x, t).abs() / bound);
        }
        v.push(PropertyResult::new(
            "potential_bounded_by_coefficient_norm",
            worst <= 1.0,
            format!("max |f| / (sqrt2 |theta|) = {worst:.3}"),
        ));

        // fitted expected velocity of the independent N(0,1)² coupling against
        // its closed form x(2t−1)/(t²+(1−t)²)
        let s0 = sample(&DistributionSpec::standard_normal(1), 4000, 43)?;
        let s1 = sample(&DistributionSpec::standard_normal(1), 4000, 44)?;
        let cpl = independent_coupling(&s0, &s1, 45)?;
        let fm = FeatureSpec {
            num_features: 512,
            ..FeatureSpec::default()
        }
        .build(&cpl, 16, 46)?;
        let (field, _) = fit_free_field(&cpl, &fm, &FitConfig::default())?;
        let mut se = 0.0;
        for i in 0..=60 {
            for j in 0..=20 {
                let x = -3.0 + 0.1 * i as f64;
                let t = j as f64 / 20.0;
                let exact = x * (2.0 * t - 1.0) / (t * t + (1.0 - t) * (1.0 - t));
                let got = field.velocity(&[x], t)[0];
                // weight by the path density N(0, t²+(1−t)²) at x
                let var = t * t + (1.0 - t) * (1.0 - t);
                let w = (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
                se += w * (got - exact) * (got - exact);
            }
        }
        let mse = se * 0.1 * 0.05;
        v.push(PropertyResult::new(
            "features_represent_gaussian_velocity",
            mse <= 1e-2,
            format!("density-weighted MSE on [-3,3]x[0,1] = {mse:.3e}"),
        ));
        Ok(v)
    };
    match run() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(PropertyResult::from_error("field_properties", e)),
    }
    out
}

fn training_determinism() -> PropertyResult {
    let name = "fits_are_deterministic";
    let run = || -> crate::error::Result<bool> {
        let cpl = small_coupling(2, 300, 51)?;
        let fm = build_features(2, 32, 1.5, 0.5, 52)?.with_affine(true);
        let p = CostFunction::power(1.5)?;
        let a = fit_potential(&cpl, &fm, &p, &FitConfig::default())?;
        let b = fit_potential(&cpl, &fm, &p, &FitConfig::default())?;
        let fa = fit_free_field(&cpl, &fm, &FitConfig::default())?;
        let fb = fit_free_field(&cpl, &fm, &FitConfig::default())?;
        Ok(a.1 == b.1 && a.0 == b.0 && fa.1 == fb.1 && fa.0 == fb.0)
    };
    match run() {
        Ok(ok) => PropertyResult::new(name, ok, "repeated fits compared bitwise"),
        Err(e) => PropertyResult::from_error(name, e),
    }
}

fn reflow_properties() -> Vec<PropertyResult> {
    let mut out = Vec::new();
    let run = || -> crate::error::Result<Vec<PropertyResult>> {
        let src = DistributionSpec::standard_normal(1);
        let dst: DistributionSpec = "gaussian:mean=1.5;cov=0.5".parse()?;
        let n = 1000;
        let s0 = sample(&src, n, 61)?;
        let s1 = sample(&dst, n, 62)?;
        let cpl = independent_coupling(&s0, &s1, 63)?;
        let refs = MarginalReferences::draw(&src, &dst, n, 4, 64)?;
        let spec = FeatureSpec {
            num_features: 64,
            ..FeatureSpec::default()
        };
        let ode = IntegratorConfig {
            method: IntegratorMethod::Rk4,
            steps: 40,
        };
        let fit = FitConfig {
            time_points: 8,
            ..FitConfig::default()
        };
        let opts = ReflowOptions {
            seed: 65,
            references: Some(&refs),
        };
        let k = 3;
        let rep = reflow(&cpl, &CostFunction::Quadratic, k, &spec, &fit, &ode, &opts)
            .map_err(|f| f.error)?;
        let c0 = rep.initial_cost;
        let mut v = Vec::new();
        let inc = rep.max_cost_increase();
        v.push(PropertyResult::new(
            "reflow_cost_monotone",
            inc <= 0.05 * c0,
            format!("max step increase {inc:.3e}, slack {:.3e}", 0.05 * c0),
        ));
        let gap = rep
            .records
            .iter()
            .map(|r| r.gap_identity_residual().abs())
            .fold(0.0, f64::max);
        v.push(PropertyResult::new(
            "reflow_gap_identity",
            gap <= 0.05 * c0,
            format!("max residual {gap:.3e}"),
        ));
        let dual = rep
            .records
            .iter()
            .map(|r| r.duality_gap.abs() / r.input_cost)
            .fold(0.0, f64::max);
        v.push(PropertyResult::new(
            "reflow_strong_duality",
            dual <= 0.05,
            format!("max relative duality gap {dual:.3e}"),
        ));
        let min_ell = rep.min_ellstar();
        v.push(PropertyResult::new(
            "reflow_certificate_decay",
            min_ell <= c0 / (k as f64 + 1.0) + 0.05 * c0,
            format!("min ellstar {min_ell:.3e}"),
        ));
        let marg = rep
            .records
            .iter()
            .map(|r| r.marginal_dist_1 / refs.baseline1)
            .fold(0.0, f64::max);
        v.push(PropertyResult::new(
            "reflow_preserves_target_marginal",
            marg <= 2.0,
            format!("max energy distance / baseline = {marg:.3}"),
        ));

        // Jensen and nonnegative straightness on a curved trajectory
        let swirl = FnField::new(2, |x: &[f64], t| vec![-x[1] * (1.0 + t), x[0] + 0.3 * t]);
        let x0 = sample(&DistributionSpec::standard_normal(2), 300, 66)?.data;
        let tr = integrate(&swirl, &x0, &IntegratorConfig::default())?;
        let q = CostFunction::Quadratic;
        let p = CostFunction::power(1.5)?;
        let mut ok = true;
        let mut detail = String::new();
        for c in [&q as &dyn ConvexCost, &p] {
            let s = straightness(&tr, c);
            ok &= s >= -1e-6;
            let end = transport_cost(&tr.endpoints(), c);
            ok &= end <= pathwise_cost(&tr, c) + 1e-6;
            detail.push_str(&format!("S={s:.3e} "));
        }
        v.push(PropertyResult::new("jensen_chain_and_straightness_sign", ok, detail.trim()));
        let lin = Trajectory::linear(&cpl, 25);
        let s = straightness(&lin, &q).abs();
        v.push(PropertyResult::new(
            "linear_interpolation_is_straight",
            s <= 1e-9,
            format!("|S| = {s:.3e}"),
        ));
        Ok(v)
    };
    match run() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(PropertyResult::from_error("reflow_properties", e)),
    }
    out
}

fn oracle_properties() -> Vec<PropertyResult> {
    let mut out = Vec::new();
    let run = || -> crate::error::Result<Vec<PropertyResult>> {
        let mut v = Vec::new();
        let q = CostFunction::Quadratic;
        let p = CostFunction::power(1.5)?;
        let mut worst: f64 = 0.0;
        let mut instances = 0;
        for seed in 0..20u64 {
            let n = [32, 64, 128][seed as usize % 3];
            let a = sample(&DistributionSpec::standard_normal(1), n, derive_seed(70, "a", seed))?;
            let b = sample(&"uniform:lo=-2;hi=3".parse()?, n, derive_seed(70, "b", seed))?;
            for c in [&q as &dyn ConvexCost, &p] {
                let qv = oracle_quantile_1d(&a, &b, c)?;
                let (hv, _) = oracle_hungarian(&a, &b, c)?;
                worst = worst.max((qv - hv).abs());
                instances += 1;
            }
        }
        v.push(PropertyResult::new(
            "quantile_equals_hungarian_1d",
            worst <= 1e-9,
            format!("max difference over {instances} instances = {worst:.3e}"),
        ));

        let cases: [(&str, &str, usize); 2] = [
            ("gaussian:mean=0;cov=1", "gaussian:mean=2;cov=1", 1),
            ("gaussian:mean=0,0;cov=I", "gaussian:mean=0,0;cov=diag(4,1)", 2),
        ];
        for (a, b, d) in cases {
            let (sa, sb): (DistributionSpec, DistributionSpec) = (a.parse()?, b.parse()?);
            let reps = HungarianReplicates::draw(&sa, &sb, &q, HUNGARIAN_MAX_N, 8, derive_seed(71, a, d as u64))?;
            let (m0, c0) = sa.gaussian_params().expect("gaussian");
            let (m1, c1) = sb.gaussian_params().expect("gaussian");
            let exact = oracle_gauss_quadratic(m0, c0, m1, c1)?;
            let rel = (reps.mean() - exact).abs() / exact;
            let (lo, hi) = reps.range();
            v.push(PropertyResult::new(
                format!("hungarian_near_gaussian_closed_form_{d}d"),
                rel <= 0.1,
                format!(
                    "mean of 8 hungarian solves {:.4} (range {lo:.4}..{hi:.4}), closed form {exact:.4}, rel {rel:.3}",
                    reps.mean()
                ),
            ));
        }

        let a = sample(&DistributionSpec::standard_normal(2), 300, 72)?;
        let b = sample(&DistributionSpec::standard_normal(2), 300, 73)?;
        let ab = energy_distance(&a, &b)?;
        let ba = energy_distance(&b, &a)?;
        let aa = energy_distance(&a, &a)?;
        v.push(PropertyResult::new(
            "energy_distance_symmetric_and_zero_on_identical",
            ab == ba && aa == 0.0,
            format!("d(a,b) = {ab:.3e}, d(b,a) = {ba:.3e}, d(a,a) = {aa:.1e}"),
        ));
        Ok(v)
    };
    match run() {
        Ok(v) => out.extend(v),
        Err(e) => out.push(PropertyResult::from_error("oracle_properties", e)),
    }
    out
}

/// The full suite, in a fixed order.
pub fn all_properties() -> Vec<PropertyResult> {
    let mut out = Vec::new();
    let costs = [
        CostFunction::Quadratic,
        CostFunction::Power { p: 1.5 },
        CostFunction::Power { p: 3.0 },
    ];
    for c in &costs {
        out.extend(cost_properties(c));
    }
    out.extend(coupling_properties());
    out.extend(field_properties());
    out.push(training_determinism());
    out.push(rk4_order());
    out.extend(reflow_properties());
    out.extend(oracle_properties());
    out
}

/// Prints one line per property and returns the number of failures.
pub fn report(results: &[PropertyResult], started: Instant) -> usize {
    let mut failed = 0;
    for r in results {
        if !r.passed {
            failed += 1;
        }
        println!(
            "{} {:<52} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    println!(
        "{} of {} properties passed in {:.1} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    failed
}
