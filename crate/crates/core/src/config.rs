//! Line-oriented experiment configuration: `[section]` headers followed by
//! `key = value` lines. `#` starts a comment line.
//!
//! ```text
//! [experiment]
//! name = gauss1d
//! source = gaussian:mean=0;cov=1
//! target = gaussian:mean=2;cov=1
//! cost = quadratic
//! n = 4000
//! seed = 7
//! iterations = 2
//!
//! [features]
//! num_features = 256
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::costs::CostFunction;
use crate::error::{Result, RiftError};
use crate::flow::{FeatureSpec, IntegratorConfig, IntegratorMethod};
use crate::synthdata::DistributionSpec;
use crate::training::FitConfig;

pub const CONFIG_SCHEMA: &str = "riftort-config/1";

/// Which oracle to evaluate in `oracle` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OracleKind {
    Quantile,
    Hungarian,
    Gauss,
}

impl OracleKind {
    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Quantile => "quantile",
            OracleKind::Hungarian => "hungarian",
            OracleKind::Gauss => "gauss",
        }
    }
}

impl FromStr for OracleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "quantile" => Ok(OracleKind::Quantile),
            "hungarian" => Ok(OracleKind::Hungarian),
            "gauss" => Ok(OracleKind::Gauss),
            other => Err(format!(
                "unknown oracle {other:?}; expected quantile, hungarian or gauss"
            )),
        }
    }
}

/// Optional measurements taken during a reflow run.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Energy distances of both marginals against fresh reference draws.
    pub marginal: bool,
    pub marginal_reps: usize,
    /// Weak-form residual test after each iteration.
    pub residual_test: bool,
    pub residual_tests: usize,
    /// Hamilton–Jacobi residual of each fitted potential.
    pub hj_residual: bool,
    pub hj_points: usize,
    /// Write `k<k>_coupling.csv` after each iteration.
    pub dump_couplings: bool,
    /// Record wall-clock seconds in `report.csv`.
    pub timings: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            marginal: true,
            marginal_reps: 4,
            residual_test: false,
            residual_tests: 16,
            hj_residual: false,
            hj_points: 256,
            dump_couplings: false,
            timings: false,
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub source: DistributionSpec,
    pub target: DistributionSpec,
    pub cost: CostFunction,
    pub n: usize,
    pub seed: u64,
    pub iterations: usize,
    pub output_dir: PathBuf,
    pub fit: FitConfig,
    pub integrator: IntegratorConfig,
    pub features: FeatureSpec,
    pub diagnostics: DiagnosticsConfig,
    /// Oracles for `oracle` runs; empty means every applicable one.
    pub oracles: Vec<OracleKind>,
    /// Sample size for `oracle` runs; defaults to `min(n, 512)`.
    pub oracle_n: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "experiment".into(),
            source: DistributionSpec::standard_normal(1),
            target: DistributionSpec::standard_normal(1),
            cost: CostFunction::Quadratic,
            n: 1000,
            seed: 0,
            iterations: 1,
            output_dir: PathBuf::from("riftort-out"),
            fit: FitConfig::default(),
            integrator: IntegratorConfig::default(),
            features: FeatureSpec::default(),
            diagnostics: DiagnosticsConfig::default(),
            oracles: Vec::new(),
            oracle_n: None,
        }
    }
}

struct Entry<'a> {
    line: usize,
    value_col: usize,
    value: &'a str,
}

impl Entry<'_> {
    fn err(&self, msg: impl Into<String>) -> RiftError {
        RiftError::parse(self.line, self.value_col, msg)
    }

    fn parse<T: FromStr>(&self, what: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.value
            .parse::<T>()
            .map_err(|e| self.err(format!("invalid {what} {:?}: {e}", self.value)))
    }

    fn bool(&self) -> Result<bool> {
        match self.value {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            v => Err(self.err(format!("expected true or false, got {v:?}"))),
        }
    }
}

const SECTIONS: &[&str] = &["experiment", "fit", "integrator", "features", "diagnostics", "oracle"];

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<RunConfig> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section: Option<&str> = None;
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let indent = raw.len() - raw.trim_start().len();
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    RiftError::parse(line, indent + 1, "section header is missing ']'")
                })?;
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(RiftError::parse(
                        line,
                        indent + 2,
                        format!("unknown section [{name}]"),
                    ));
                }
                section = Some(SECTIONS[SECTIONS.iter().position(|s| *s == name).unwrap()]);
                continue;
            }
            let eq = body
                .find('=')
                .ok_or_else(|| RiftError::parse(line, indent + 1, "expected `key = value`"))?;
            let key = body[..eq].trim();
            let after = &body[eq + 1..];
            let value = after.trim();
            let value_col = indent + eq + 2 + (after.len() - after.trim_start().len());
            if key.is_empty() {
                return Err(RiftError::parse(line, indent + 1, "empty key"));
            }
            let sec = section.ok_or_else(|| {
                RiftError::parse(line, indent + 1, format!("key `{key}` appears before any section"))
            })?;
            if !seen.insert((sec, key.to_string())) {
                return Err(RiftError::parse(
                    line,
                    indent + 1,
                    format!("duplicate key `{key}` in [{sec}]"),
                ));
            }
            let e = Entry {
                line,
                value_col,
                value,
            };
            cfg.apply(sec, key, &e)
                .map_err(|err| match err {
                    RiftError::Parse { .. } => err,
                    other => e.err(other.to_string()),
                })?
                .then_some(())
                .ok_or_else(|| {
                    RiftError::parse(line, indent + 1, format!("unknown key `{key}` in [{sec}]"))
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one entry; `Ok(false)` flags an unknown key.
    fn apply(&mut self, section: &str, key: &str, e: &Entry<'_>) -> Result<bool> {
        match (section, key) {
            ("experiment", "name") => self.name = e.value.to_string(),
            ("experiment", "source") => self.source = e.parse("distribution")?,
            ("experiment", "target") => self.target = e.parse("distribution")?,
            ("experiment", "cost") => self.cost = e.parse("cost")?,
            ("experiment", "n") => self.n = e.parse("sample size")?,
            ("experiment", "seed") => self.seed = e.parse("seed")?,
            ("experiment", "iterations") => self.iterations = e.parse("iteration count")?,
            ("experiment", "output_dir") => self.output_dir = PathBuf::from(e.value),

            ("fit", "ridge_lambda") => self.fit.ridge_lambda = e.parse("number")?,
            ("fit", "time_points") => self.fit.time_points = e.parse("count")?,
            ("fit", "max_iters") => self.fit.max_iters = e.parse("count")?,
            ("fit", "grad_tol") => self.fit.grad_tol = e.parse("number")?,
            ("fit", "armijo_c") => self.fit.armijo_c = e.parse("number")?,
            ("fit", "armijo_backtrack") => self.fit.armijo_backtrack = e.parse("number")?,
            ("fit", "init_step") => self.fit.init_step = e.parse("number")?,
            ("fit", "precondition") => self.fit.precondition = e.bool()?,

            ("integrator", "method") => self.integrator.method = e.parse::<IntegratorMethod>("method")?,
            ("integrator", "steps") => self.integrator.steps = e.parse("count")?,

            ("features", "num_features") => self.features.num_features = e.parse("count")?,
            ("features", "bandwidth_x") => {
                self.features.bandwidth_x = match e.value {
                    "auto" => None,
                    _ => Some(e.parse("bandwidth")?),
                }
            }
            ("features", "bandwidth_factor") => self.features.bandwidth_factor = e.parse("number")?,
            ("features", "bandwidth_t") => self.features.bandwidth_t = e.parse("bandwidth")?,
            ("features", "affine") => self.features.affine = e.bool()?,

            ("diagnostics", "marginal") => self.diagnostics.marginal = e.bool()?,
            ("diagnostics", "marginal_reps") => self.diagnostics.marginal_reps = e.parse("count")?,
            ("diagnostics", "residual_test") => self.diagnostics.residual_test = e.bool()?,
            ("diagnostics", "residual_tests") => self.diagnostics.residual_tests = e.parse("count")?,
            ("diagnostics", "hj_residual") => self.diagnostics.hj_residual = e.bool()?,
            ("diagnostics", "hj_points") => self.diagnostics.hj_points = e.parse("count")?,
            ("diagnostics", "dump_couplings") => self.diagnostics.dump_couplings = e.bool()?,
            ("diagnostics", "timings") => self.diagnostics.timings = e.bool()?,

            ("oracle", "methods") => {
                let mut kinds = Vec::new();
                for part in e.value.split(',').filter(|p| !p.trim().is_empty()) {
                    kinds.push(part.parse::<OracleKind>().map_err(|m| e.err(m))?);
                }
                kinds.sort();
                kinds.dedup();
                self.oracles = kinds;
            }
            ("oracle", "n") => self.oracle_n = Some(e.parse("sample size")?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Checks cross-field invariants not caught while parsing single values.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(RiftError::Construction(m));
        if self.n < 2 {
            return fail(format!("n must be at least 2, got {}", self.n));
        }
        if self.iterations < 1 {
            return fail("iterations must be at least 1".into());
        }
        if self.source.dim() != self.target.dim() {
            return fail(format!(
                "source has d = {} but target has d = {}",
                self.source.dim(),
                self.target.dim()
            ));
        }
        self.source.validate()?;
        self.target.validate()?;
        self.fit.validate()?;
        if self.integrator.steps == 0 {
            return fail("integrator steps must be at least 1".into());
        }
        if self.features.num_features == 0 {
            return fail("num_features must be at least 1".into());
        }
        if let Some(b) = self.features.bandwidth_x {
            if !(b > 0.0 && b.is_finite()) {
                return fail(format!("bandwidth_x must be positive, got {b}"));
            }
        }
        if !(self.features.bandwidth_factor > 0.0 && self.features.bandwidth_t > 0.0) {
            return fail("bandwidth_factor and bandwidth_t must be positive".into());
        }
        if self.diagnostics.marginal_reps == 0 {
            return fail("marginal_reps must be at least 1".into());
        }
        if self.oracle_n == Some(0) {
            return fail("oracle n must be at least 1".into());
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    /// The resolved configuration as JSON, for run provenance.
    pub fn to_json(&self) -> Value {
        json!({
            "schema": CONFIG_SCHEMA,
            "experiment": {
                "name": self.name,
                "source": self.source.to_string(),
                "target": self.target.to_string(),
                "cost": self.cost.to_string(),
                "n": self.n,
                "seed": self.seed,
                "iterations": self.iterations,
                "output_dir": self.output_dir.display().to_string(),
            },
            "fit": {
                "ridge_lambda": self.fit.ridge_lambda,
                "time_points": self.fit.time_points,
                "max_iters": self.fit.max_iters,
                "grad_tol": self.fit.grad_tol,
                "armijo_c": self.fit.armijo_c,
                "armijo_backtrack": self.fit.armijo_backtrack,
                "init_step": self.fit.init_step,
                "precondition": self.fit.precondition,
            },
            "integrator": {
                "method": match self.integrator.method {
                    IntegratorMethod::Euler => "euler",
                    IntegratorMethod::Rk4 => "rk4",
                },
                "steps": self.integrator.steps,
            },
            "features": {
                "num_features": self.features.num_features,
                "bandwidth_x": self.features.bandwidth_x.map_or(json!("auto"), |b| json!(b)),
                "bandwidth_factor": self.features.bandwidth_factor,
                "bandwidth_t": self.features.bandwidth_t,
                "affine": self.features.affine,
            },
            "diagnostics": {
                "marginal": self.diagnostics.marginal,
                "marginal_reps": self.diagnostics.marginal_reps,
                "residual_test": self.diagnostics.residual_test,
                "residual_tests": self.diagnostics.residual_tests,
                "hj_residual": self.diagnostics.hj_residual,
                "hj_points": self.diagnostics.hj_points,
                "dump_couplings": self.diagnostics.dump_couplings,
                "timings": self.diagnostics.timings,
            },
            "oracle": {
                "methods": self.oracles.iter().map(|k| k.name()).collect::<Vec<_>>(),
                "n": self.oracle_n,
            },
        })
    }
}
