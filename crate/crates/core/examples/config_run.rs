//! Running a reflow experiment from config text, as the `riftort reflow`
//! subcommand does, and reading back its outputs.
//!
//! Run with `cargo run --release --example config_run`.

use riftort::cli::{run_reflow_config, EXIT_OK};
use riftort::config::RunConfig;

const CONFIG: &str = "\
[experiment]
name = example
source = gaussian:mean=0;cov=1
target = uniform:lo=1;hi=3
cost = power:2.5
n = 800
seed = 21
iterations = 2

[features]
num_features = 96

[integrator]
method = rk4
steps = 60

[diagnostics]
hj_residual = true
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::parse(CONFIG)?;
    let out = std::env::temp_dir().join("riftort_config_example");
    if run_reflow_config(&cfg, Some(&out)) != EXIT_OK {
        return Err("reflow failed".into());
    }
    print!("{}", std::fs::read_to_string(out.join("report.csv"))?);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json"))?)?;
    println!("schema {}, final cost {}", summary["schema"], summary["final_cost"]);
    println!("resolved config: {}", summary["config"]["experiment"]);
    std::fs::remove_dir_all(&out)?;
    Ok(())
}
