use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const MINIMAL: &str = "\
[experiment]
name = minimal
source = gaussian:mean=0;cov=1
target = gaussian:mean=2;cov=1
n = 200
seed = 9
iterations = 1

[integrator]
steps = 20

[features]
num_features = 32
";

fn riftort(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_riftort"));
    cmd.args(args);
    match out {
        Some(dir) => cmd.env("RIFTORT_OUT", dir),
        None => cmd.env_remove("RIFTORT_OUT"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_reflow_writes_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.conf", MINIMAL);
    let out = tmp.path().join("run");
    let o = riftort(&["reflow", cfg.to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "k,cost,ellstar,straightness,pathwise_cost,duality_gap,marg0,marg1,seconds"
    );
    assert_eq!(lines[1].split(',').count(), 9);

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], "riftort-summary/1");
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["config"]["schema"], "riftort-config/1");
    assert_eq!(summary["config"]["experiment"]["seed"], 9);
    assert_eq!(summary["config"]["features"]["num_features"], 32);
    assert_eq!(summary["iterations"].as_array().unwrap().len(), 1);
    assert!(out.join("k1_potential.field").exists());
}

#[test]
fn reflow_is_bitwise_deterministic_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.conf", MINIMAL);
    let mut reports = Vec::new();
    for (i, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let o = riftort(
            &["--threads", threads, "reflow", cfg.to_str().unwrap()],
            Some(&out),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        reports.push((
            fs::read(out.join("report.csv")).unwrap(),
            fs::read(out.join("k1_potential.field")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[1], reports[2]);
}

#[test]
fn invalid_power_exponent_is_a_parse_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("n = 200", "n = 200\ncost = power:0.5");
    let cfg = write_config(tmp.path(), "bad.conf", &text);
    let o = riftort(&["reflow", cfg.to_str().unwrap()], Some(&tmp.path().join("run")));
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 6"), "{err}");
    assert!(err.contains("column 8"), "{err}");
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn unknown_key_reports_position() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("steps = 20", "steps = 20\nstepz = 3");
    let cfg = write_config(tmp.path(), "typo.conf", &text);
    let o = riftort(&["reflow", cfg.to_str().unwrap()], Some(&tmp.path().join("run")));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stepz"));
}

#[test]
fn missing_config_is_an_io_failure() {
    let o = riftort(&["reflow", "/nonexistent/riftort.conf"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn optional_diagnostics_and_coupling_dumps() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{MINIMAL}\n[diagnostics]\nhj_residual = true\nhj_points = 64\nresidual_test = true\nresidual_tests = 4\ndump_couplings = true\ntimings = true\n"
    );
    let cfg = write_config(tmp.path(), "diag.conf", &text);
    let out = tmp.path().join("run");
    let o = riftort(&["reflow", cfg.to_str().unwrap()], Some(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let it = &summary["iterations"][0];
    for key in ["hj_residual_mean", "hj_residual_max", "residual_weak_form", "seconds"] {
        assert!(it[key].is_number(), "missing {key}");
    }
    let dump = fs::read_to_string(out.join("k1_coupling.csv")).unwrap();
    assert_eq!(dump.lines().next().unwrap(), "x0_1,x1_1");
    assert_eq!(dump.lines().count(), 201);
}

#[test]
fn oracle_table_for_gaussian_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("n = 200", "n = 512");
    let cfg = write_config(tmp.path(), "o.conf", &text);
    let o = riftort(&["oracle", cfg.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<(String, f64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap())
        })
        .collect();
    let names: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert_eq!(names, ["quantile", "hungarian", "gauss"]);
    assert!((rows[0].1 - rows[1].1).abs() <= 1e-9);
    assert!((rows[2].1 - 2.0).abs() <= 1e-12);
    assert!((rows[1].1 - 2.0).abs() / 2.0 <= 0.2);
}

#[test]
fn oracle_on_identical_distributions_is_near_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let text = MINIMAL.replace("mean=2", "mean=0").replace("n = 200", "n = 256");
    let cfg = write_config(tmp.path(), "same.conf", &text);
    let o = riftort(&["oracle", cfg.to_str().unwrap()], None);
    assert!(o.status.success());
    for line in String::from_utf8(o.stdout).unwrap().lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v < 0.05, "{line}");
    }
}

#[test]
fn quantile_oracle_rejects_three_dimensions() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "\
[experiment]
source = gaussian:mean=0,0,0;cov=I
target = gaussian:mean=1,0,0;cov=I
n = 64

[oracle]
methods = quantile
";
    let cfg = write_config(tmp.path(), "d3.conf", text);
    let o = riftort(&["oracle", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn counterexample_small_sample_warns() {
    let o = riftort(&["counterexample", "--seed", "3", "--n", "10"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("small sample"));
    let text = String::from_utf8(o.stdout).unwrap();
    for key in ["transport_cost", "straightness_gap", "rectified_cost", "ellstar"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn selftest_passes() {
    let o = riftort(&["selftest"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(!text.contains("FAIL"));
    assert!(text.contains("gradients_match_finite_differences"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        riftort::config::RunConfig::from_file(&path)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 3);
}
