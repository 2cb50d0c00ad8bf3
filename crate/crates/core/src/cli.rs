//! Batch runners behind the `riftort` subcommands. Each returns a process
//! exit status: 0 on success, 1 on I/O failure or a failed check, 2 on an
//! invalid configuration, 3 on a numeric failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use crate::config::{OracleKind, RunConfig};
use crate::costs::{ConvexCost, CostFunction};
use crate::diagnostics::{
    hj_residual, interpolation_slices, marginal_preservation, normalized_straightness_gap,
    oracle_gauss_quadratic, oracle_hungarian, oracle_quantile_1d, straightness, transport_cost,
    MarginalReferences, HUNGARIAN_MAX_N,
};
use crate::error::RiftError;
use crate::fields::{PotentialDrift, ResidualField};
use crate::flow::{c_rectify, reflow, FeatureSpec, IntegratorConfig, ReflowOptions, ReflowReport};
use crate::synthdata::{derive_seed, independent_coupling, rotation_coupling, sample, time_grid, DistributionSpec, PairedCoupling};
use crate::training::{fit_free_field, FitConfig};

pub const SUMMARY_SCHEMA: &str = "riftort-summary/1";
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Exit status for an error: configuration problems map to 2, numeric
/// trouble to 3 and I/O to 1.
pub fn exit_code(err: &RiftError) -> i32 {
    match err {
        RiftError::Parse { .. }
        | RiftError::Domain(_)
        | RiftError::Construction(_)
        | RiftError::SizeMismatch(_)
        | RiftError::Unsupported(_) => EXIT_CONFIG,
        RiftError::Numeric(_) | RiftError::Optimization(_) | RiftError::Integration { .. } => {
            EXIT_NUMERIC
        }
        RiftError::Io(_) => EXIT_FAILURE,
    }
}

fn fail(context: &str, err: &RiftError) -> i32 {
    eprintln!("riftort: {context}: {err}");
    exit_code(err)
}

/// Reads a config, reporting the exit status on failure.
fn load(path: &Path) -> Result<RunConfig, i32> {
    RunConfig::from_file(path).map_err(|e| fail(&path.display().to_string(), &e))
}

/// Data and references drawn for a run, all derived from the config seed.
struct Inputs {
    coupling: PairedCoupling,
    references: Option<MarginalReferences>,
}

fn draw_inputs(cfg: &RunConfig) -> crate::error::Result<Inputs> {
    let s0 = sample(&cfg.source, cfg.n, derive_seed(cfg.seed, "source", 0))?;
    let s1 = sample(&cfg.target, cfg.n, derive_seed(cfg.seed, "target", 0))?;
    let coupling = independent_coupling(&s0, &s1, derive_seed(cfg.seed, "pairing", 0))?;
    let references = if cfg.diagnostics.marginal {
        Some(MarginalReferences::draw(
            &cfg.source,
            &cfg.target,
            cfg.n,
            cfg.diagnostics.marginal_reps,
            derive_seed(cfg.seed, "references", 0),
        )?)
    } else {
        None
    };
    Ok(Inputs {
        coupling,
        references,
    })
}

/// A closed-form or discrete optimum to compare the final cost against.
fn reference_optimum(cfg: &RunConfig) -> crate::error::Result<Option<(&'static str, f64)>> {
    if let (Some((m0, c0)), Some((m1, c1))) = (cfg.source.gaussian_params(), cfg.target.gaussian_params())
    {
        if cfg.cost.is_quadratic() {
            return Ok(Some(("gauss_quadratic", oracle_gauss_quadratic(m0, c0, m1, c1)?)));
        }
    }
    if cfg.dim() == 1 {
        let a = sample(&cfg.source, cfg.n, derive_seed(cfg.seed, "heldout_source", 0))?;
        let b = sample(&cfg.target, cfg.n, derive_seed(cfg.seed, "heldout_target", 0))?;
        return Ok(Some(("quantile_1d_heldout", oracle_quantile_1d(&a, &b, &cfg.cost)?)));
    }
    Ok(None)
}

fn coupling_csv(cpl: &PairedCoupling) -> String {
    let d = cpl.dim();
    let mut out = String::new();
    let names: Vec<String> = (1..=d)
        .map(|k| format!("x0_{k}"))
        .chain((1..=d).map(|k| format!("x1_{k}")))
        .collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for (a, b) in cpl.x0.rows().into_iter().zip(cpl.x1.rows()) {
        let vals: Vec<String> = a.iter().chain(b.iter()).map(|v| format!("{v:.16e}")).collect();
        out.push_str(&vals.join(","));
        out.push('\n');
    }
    out
}

/// Diagnostics computed after the loop from the stored couplings and
/// potentials, keyed by iteration.
fn extra_diagnostics(
    cfg: &RunConfig,
    report: &ReflowReport,
) -> crate::error::Result<Vec<serde_json::Map<String, Value>>> {
    let mut out = Vec::new();
    for (idx, pf) in report.potentials.iter().enumerate() {
        let k = idx + 1;
        let input = &report.couplings[idx];
        let mut m = serde_json::Map::new();
        if cfg.diagnostics.hj_residual {
            let grid = time_grid(cfg.fit.time_points);
            let n = input.len();
            let count = cfg.diagnostics.hj_points.min(n * grid.len()).max(1);
            let points: Vec<(Vec<f64>, f64)> = (0..count)
                .map(|i| {
                    let row = i * n / count;
                    let t = grid[i % grid.len()];
                    let x = (&input.x1.row(row) * t + &input.x0.row(row) * (1.0 - t)).to_vec();
                    (x, t)
                })
                .collect();
            let (mean, max) = hj_residual(pf, &cfg.cost, &points)?;
            m.insert("hj_residual_mean".into(), json!(mean));
            m.insert("hj_residual_max".into(), json!(max));
        }
        if cfg.diagnostics.residual_test {
            let fm = cfg.features.build(
                input,
                cfg.fit.time_points,
                derive_seed(cfg.seed, "features", k as u64),
            )?;
            let (free, _) = fit_free_field(input, &fm, &cfg.fit)?;
            let residual = ResidualField {
                free: &free,
                drift: PotentialDrift {
                    potential: pf,
                    cost: &cfg.cost,
                },
            };
            let slices = interpolation_slices(input, cfg.fit.time_points);
            let stat = marginal_preservation(
                &residual,
                &slices,
                cfg.diagnostics.residual_tests,
                derive_seed(cfg.seed, "residual_test", k as u64),
            )?;
            m.insert("residual_weak_form".into(), json!(stat));
        }
        out.push(m);
    }
    Ok(out)
}

fn summary_json(
    cfg: &RunConfig,
    report: &ReflowReport,
    references: Option<&MarginalReferences>,
    extras: &[serde_json::Map<String, Value>],
    reference: Option<(&str, f64)>,
    error: Option<&RiftError>,
) -> Value {
    let iterations: Vec<Value> = report
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = json!({
                "k": r.k,
                "input_cost": r.input_cost,
                "cost": r.transport_cost,
                "ellstar": r.ellstar,
                "straightness": r.straightness,
                "pathwise_cost": r.pathwise_cost,
                "duality_gap": r.duality_gap,
                "gap_identity_residual": r.gap_identity_residual(),
                "marg0": r.marginal_dist_0,
                "marg1": r.marginal_dist_1,
                "fit_iterations": r.fit.iterations,
                "fit_converged": r.fit.converged,
                "fit_grad_norm": r.fit.final_grad_norm,
            });
            if cfg.diagnostics.timings {
                v["seconds"] = json!(r.wall_time);
            }
            if let Some(extra) = extras.get(i) {
                for (key, val) in extra {
                    v[key] = val.clone();
                }
            }
            v
        })
        .collect();
    json!({
        "schema": SUMMARY_SCHEMA,
        "config": cfg.to_json(),
        "status": if error.is_some() { "failed" } else { "ok" },
        "error": error.map(|e| e.to_string()),
        "completed_iterations": report.records.len(),
        "initial_cost": report.initial_cost,
        "final_cost": report.records.last().map(|r| r.transport_cost),
        "certificate_sum": report.certificate_sum(),
        "min_ellstar": if report.records.is_empty() { None } else { Some(report.min_ellstar()) },
        "max_cost_increase": if report.records.is_empty() { None } else { Some(report.max_cost_increase()) },
        "marginal_baseline": references.map(|r| json!({"source": r.baseline0, "target": r.baseline1})),
        "reference_optimum": reference.map(|(kind, v)| json!({"kind": kind, "value": v})),
        "iterations": iterations,
    })
}

fn write_outputs(
    out: &Path,
    cfg: &RunConfig,
    report: &ReflowReport,
    summary: &Value,
) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("report.csv"), report.to_csv(cfg.diagnostics.timings))?;
    let mut text = serde_json::to_string_pretty(summary).expect("serializable summary");
    text.push('\n');
    fs::write(out.join("summary.json"), text)?;
    for (i, pf) in report.potentials.iter().enumerate() {
        fs::write(out.join(format!("k{}_potential.field", i + 1)), pf.to_text())?;
    }
    if cfg.diagnostics.dump_couplings {
        for (i, cpl) in report.couplings.iter().enumerate().skip(1) {
            fs::write(out.join(format!("k{i}_coupling.csv")), coupling_csv(cpl))?;
        }
    }
    Ok(())
}

/// Runs the configured reflow experiment and writes `report.csv`,
/// `summary.json`, `k<k>_potential.field` and, if enabled,
/// `k<k>_coupling.csv` into `out_dir` (or the configured directory).
pub fn run_reflow(config_path: &Path, out_dir: Option<&Path>) -> i32 {
    let cfg = match load(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    run_reflow_config(&cfg, out_dir)
}

pub fn run_reflow_config(cfg: &RunConfig, out_dir: Option<&Path>) -> i32 {
    let out: PathBuf = out_dir.map_or_else(|| cfg.output_dir.clone(), Path::to_path_buf);
    let inputs = match draw_inputs(cfg) {
        Ok(i) => i,
        Err(e) => return fail("drawing samples", &e),
    };
    let reference = match reference_optimum(cfg) {
        Ok(r) => r,
        Err(e) => return fail("reference optimum", &e),
    };
    let opts = ReflowOptions {
        seed: cfg.seed,
        references: inputs.references.as_ref(),
    };
    let (report, error) = match reflow(
        &inputs.coupling,
        &cfg.cost,
        cfg.iterations,
        &cfg.features,
        &cfg.fit,
        &cfg.integrator,
        &opts,
    ) {
        Ok(r) => (r, None),
        Err(f) => (f.partial, Some(f.error)),
    };
    let (extras, error) = match extra_diagnostics(cfg, &report) {
        Ok(x) => (x, error),
        Err(e) => (Vec::new(), error.or(Some(e))),
    };
    let summary = summary_json(cfg, &report, inputs.references.as_ref(), &extras, reference, error.as_ref());
    if let Err(e) = write_outputs(&out, cfg, &report, &summary) {
        eprintln!("riftort: writing outputs to {}: {e}", out.display());
        return EXIT_FAILURE;
    }
    for r in &report.records {
        println!(
            "k={} cost={:.6} ellstar={:.6} straightness={:.6} marg1={:.3e}",
            r.k, r.transport_cost, r.ellstar, r.straightness, r.marginal_dist_1
        );
    }
    match error {
        Some(e) => fail(&format!("reflow ({} iterations written)", report.records.len()), &e),
        None => {
            println!("wrote {}", out.display());
            EXIT_OK
        }
    }
}

/// Below this sample size the counterexample checks are reported but not enforced.
pub const SMALL_SAMPLE: usize = 200;

/// Quantities printed by [`run_counterexample`].
#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleOutcome {
    pub transport_cost: f64,
    pub normalized_gap: f64,
    pub rectified_cost: f64,
    pub ellstar: f64,
    pub straightness: f64,
}

impl CounterexampleOutcome {
    pub fn reduction(&self) -> f64 {
        self.transport_cost - self.rectified_cost
    }

    pub fn predicted_reduction(&self) -> f64 {
        self.straightness + self.ellstar
    }
}

/// The quarter-turn rotation coupling of `N(0, I₂)`: straight, yet far from
/// optimal, and improved by a single c-rectify step.
pub fn counterexample(
    seed: u64,
    n: usize,
    features: &FeatureSpec,
    fit: &FitConfig,
    ode: &IntegratorConfig,
) -> crate::error::Result<CounterexampleOutcome> {
    let q = CostFunction::Quadratic;
    let s = sample(&DistributionSpec::standard_normal(2), n, derive_seed(seed, "source", 0))?;
    let cpl = rotation_coupling(&s, std::f64::consts::FRAC_PI_2)?;
    let fm = features.build(&cpl, fit.time_points, derive_seed(seed, "features", 1))?;
    let normalized_gap = normalized_straightness_gap(&cpl, &fm, fit)?;
    let out = c_rectify(&cpl, &q, &fm, fit, ode)?;
    Ok(CounterexampleOutcome {
        transport_cost: transport_cost(&cpl, &q),
        normalized_gap,
        rectified_cost: transport_cost(&out.coupling, &q),
        ellstar: out.report.final_loss,
        straightness: straightness(&out.trajectory, &q),
    })
}

/// Default feature settings for the counterexample run.
pub fn counterexample_features() -> FeatureSpec {
    FeatureSpec {
        num_features: 256,
        ..FeatureSpec::default()
    }
}

pub fn run_counterexample(seed: u64, n: usize) -> i32 {
    if n < 2 {
        eprintln!("riftort: counterexample needs n >= 2");
        return EXIT_CONFIG;
    }
    let small = n < SMALL_SAMPLE;
    if small {
        eprintln!(
            "warning: n = {n} is a small sample; the checks below are statistical and reported only"
        );
    }
    let res = counterexample(
        seed,
        n,
        &counterexample_features(),
        &FitConfig::default(),
        &IntegratorConfig::default(),
    );
    let o = match res {
        Ok(o) => o,
        Err(e) => return fail("counterexample", &e),
    };
    println!("rotation coupling theta = pi/2 on N(0, I_2), n = {n}, seed = {seed}");
    println!("transport_cost        {:.6}", o.transport_cost);
    println!("straightness_gap      {:.6} (normalized)", o.normalized_gap);
    println!("rectified_cost        {:.6}", o.rectified_cost);
    println!("ellstar               {:.6}", o.ellstar);
    println!("straightness          {:.6}", o.straightness);
    println!("cost_reduction        {:.6}", o.reduction());
    println!("predicted_reduction   {:.6}", o.predicted_reduction());
    let checks = [
        ("straight: normalized gap <= 0.05", o.normalized_gap <= 0.05),
        ("suboptimal: cost within 2.0 +- 0.1", (o.transport_cost - 2.0).abs() <= 0.1),
        (
            "improved: rectified < cost - max(0, ellstar - 0.1)",
            o.rectified_cost < o.transport_cost - (o.ellstar - 0.1).max(0.0),
        ),
    ];
    let mut ok = true;
    for (name, pass) in checks {
        ok &= pass;
        println!("check {:<52} {}", name, if pass { "pass" } else { "FAIL" });
    }
    if ok || small {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

/// One computed oracle value.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub kind: OracleKind,
    pub value: f64,
    pub n: usize,
}

/// Evaluates the configured oracles on fresh samples of the configured pair.
pub fn oracles(cfg: &RunConfig) -> crate::error::Result<Vec<OracleRow>> {
    let d = cfg.dim();
    let gaussian = cfg.source.gaussian_params().zip(cfg.target.gaussian_params());
    let requested = if cfg.oracles.is_empty() {
        let mut all = vec![OracleKind::Hungarian];
        if d == 1 {
            all.insert(0, OracleKind::Quantile);
        }
        if gaussian.is_some() && cfg.cost.is_quadratic() {
            all.push(OracleKind::Gauss);
        }
        all
    } else {
        cfg.oracles.clone()
    };
    let n = cfg.oracle_n.unwrap_or(cfg.n.min(HUNGARIAN_MAX_N));
    let s0 = sample(&cfg.source, n, derive_seed(cfg.seed, "oracle_source", 0))?;
    let s1 = sample(&cfg.target, n, derive_seed(cfg.seed, "oracle_target", 0))?;
    let mut rows = Vec::new();
    for kind in requested {
        let value = match kind {
            OracleKind::Quantile => oracle_quantile_1d(&s0, &s1, &cfg.cost)?,
            OracleKind::Hungarian => oracle_hungarian(&s0, &s1, &cfg.cost)?.0,
            OracleKind::Gauss => {
                let ((m0, c0), (m1, c1)) = gaussian.ok_or_else(|| {
                    RiftError::Unsupported("gauss oracle needs Gaussian source and target".into())
                })?;
                if !cfg.cost.is_quadratic() {
                    return Err(RiftError::Unsupported("gauss oracle needs the quadratic cost".into()));
                }
                oracle_gauss_quadratic(m0, c0, m1, c1)?
            }
        };
        let n = if kind == OracleKind::Gauss { 0 } else { n };
        rows.push(OracleRow { kind, value, n });
    }
    Ok(rows)
}

/// Prints `oracle,value,n` rows to stdout.
pub fn run_oracle(config_path: &Path) -> i32 {
    let cfg = match load(config_path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match oracles(&cfg) {
        Ok(rows) => {
            let mut out = String::from("oracle,value,n\n");
            for r in rows {
                let _ = writeln!(out, "{},{:.16e},{}", r.kind.name(), r.value, r.n);
            }
            print!("{out}");
            EXIT_OK
        }
        Err(e) => fail("oracle", &e),
    }
}

/// Runs the property suite; exit 0 iff every property passes.
pub fn run_selftest() -> i32 {
    let started = Instant::now();
    let results = crate::selftest::all_properties();
    if crate::selftest::report(&results, started) == 0 {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
