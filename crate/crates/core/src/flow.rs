//! ODE integration of fitted drifts, the Rectify and c-Rectify maps, and the
//! recursive reflow loop.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;

use crate::costs::ConvexCost;
use crate::diagnostics::{pathwise_cost, transport_cost, MarginalReferences};
use crate::error::{Result, RiftError};
use crate::fields::{
    build_features, median_pairwise_distance, FeatureMap, FreeVectorField, PotentialDrift,
    PotentialField, VelocityField,
};
use crate::synthdata::{derive_seed, time_grid, PairedCoupling};
use crate::training::{fit_free_field, fit_potential, FitConfig, FitReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegratorMethod {
    Euler,
    Rk4,
}

impl FromStr for IntegratorMethod {
    type Err = RiftError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(IntegratorMethod::Euler),
            "rk4" => Ok(IntegratorMethod::Rk4),
            other => Err(RiftError::Construction(format!(
                "unknown integrator {other:?}; expected euler or rk4"
            ))),
        }
    }
}

/// Fixed-step explicit integration on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: IntegratorMethod,
    pub steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: IntegratorMethod::Rk4,
            steps: 100,
        }
    }
}

/// Particle states at `steps + 1` equally spaced times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// One `n × d` state matrix per time.
    pub states: Vec<Array2<f64>>,
    pub provenance: String,
}

impl Trajectory {
    pub fn start(&self) -> &Array2<f64> {
        &self.states[0]
    }

    pub fn end(&self) -> &Array2<f64> {
        self.states.last().expect("trajectory has states")
    }

    /// The coupling of initial and final states.
    pub fn endpoints(&self) -> PairedCoupling {
        PairedCoupling {
            x0: self.start().clone(),
            x1: self.end().clone(),
        }
    }

    /// Trajectory of straight lines between the coupled points.
    pub fn linear(cpl: &PairedCoupling, steps: usize) -> Trajectory {
        let steps = steps.max(1);
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        let states = times
            .iter()
            .map(|&t| &cpl.x1 * t + &cpl.x0 * (1.0 - t))
            .collect();
        Trajectory {
            times,
            states,
            provenance: "linear interpolation".into(),
        }
    }
}

const PARTICLE_CHUNK: usize = 512;

fn integrate_chunk(
    drift: &dyn VelocityField,
    x0: ArrayView2<'_, f64>,
    cfg: &IntegratorConfig,
    times: &[f64],
) -> std::result::Result<Vec<Array2<f64>>, usize> {
    let h = 1.0 / cfg.steps as f64;
    let mut x = x0.to_owned();
    let mut out = Vec::with_capacity(cfg.steps + 1);
    out.push(x.clone());
    for step in 0..cfg.steps {
        let t = times[step];
        match cfg.method {
            IntegratorMethod::Euler => {
                let k1 = drift.velocity_batch(x.view(), t);
                x = x + k1 * h;
            }
            IntegratorMethod::Rk4 => {
                let k1 = drift.velocity_batch(x.view(), t);
                let k2 = drift.velocity_batch((&x + &(&k1 * (0.5 * h))).view(), t + 0.5 * h);
                let k3 = drift.velocity_batch((&x + &(&k2 * (0.5 * h))).view(), t + 0.5 * h);
                let k4 = drift.velocity_batch((&x + &(&k3 * h)).view(), t + h);
                x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(step + 1);
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// Integrates `dx/dt = drift(x, t)` from `x0` on `[0, 1]`.
pub fn integrate(
    drift: &dyn VelocityField,
    x0: &Array2<f64>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if cfg.steps == 0 {
        return Err(RiftError::Construction("integrator needs at least one step".into()));
    }
    if drift.dim() != x0.ncols() {
        return Err(RiftError::SizeMismatch(format!(
            "drift has d = {}, states have d = {}",
            drift.dim(),
            x0.ncols()
        )));
    }
    let n = x0.nrows();
    let times: Vec<f64> = (0..=cfg.steps).map(|k| k as f64 / cfg.steps as f64).collect();
    let starts: Vec<usize> = (0..n).step_by(PARTICLE_CHUNK).collect();
    let chunks: Vec<_> = starts
        .par_iter()
        .map(|&a| {
            let b = (a + PARTICLE_CHUNK).min(n);
            integrate_chunk(drift, x0.slice(s![a..b, ..]), cfg, &times)
        })
        .collect();
    let mut pieces = Vec::with_capacity(chunks.len());
    for c in chunks {
        match c {
            Ok(p) => pieces.push(p),
            Err(step) => {
                return Err(RiftError::Integration {
                    step,
                    time: times[step],
                })
            }
        }
    }
    let mut states = Vec::with_capacity(cfg.steps + 1);
    for k in 0..=cfg.steps {
        let views: Vec<_> = pieces.iter().map(|p| p[k].view()).collect();
        states.push(if views.is_empty() {
            Array2::zeros((0, x0.ncols()))
        } else {
            ndarray::concatenate(ndarray::Axis(0), &views).expect("consistent chunks")
        });
    }
    Ok(Trajectory {
        times,
        states,
        provenance: format!("{:?}, {} steps", cfg.method, cfg.steps),
    })
}

/// Feature-map settings applied to each fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub num_features: usize,
    /// Fixed spatial bandwidth; `None` selects the median heuristic.
    pub bandwidth_x: Option<f64>,
    /// Multiplier on the median pairwise distance.
    pub bandwidth_factor: f64,
    pub bandwidth_t: f64,
    pub affine: bool,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            num_features: 1024,
            bandwidth_x: None,
            bandwidth_factor: 2.0,
            bandwidth_t: 0.5,
            affine: true,
        }
    }
}

const MEDIAN_POINTS: usize = 512;

impl FeatureSpec {
    /// Builds a feature map for fitting on `cpl`'s linear interpolation.
    pub fn build(&self, cpl: &PairedCoupling, time_points: usize, seed: u64) -> Result<FeatureMap> {
        let bw = match self.bandwidth_x {
            Some(b) => b,
            None => {
                let grid = time_grid(time_points);
                let n = cpl.len();
                let take = n.min(MEDIAN_POINTS);
                let mut pts = Array2::zeros((take, cpl.dim()));
                for i in 0..take {
                    let row = i * n / take;
                    let t = grid[i % grid.len()];
                    let xt = &cpl.x1.row(row) * t + &cpl.x0.row(row) * (1.0 - t);
                    pts.row_mut(i).assign(&xt);
                }
                self.bandwidth_factor * median_pairwise_distance(pts.view(), MEDIAN_POINTS)
            }
        };
        Ok(build_features(cpl.dim(), self.num_features, bw, self.bandwidth_t, seed)?
            .with_affine(self.affine))
    }
}

/// Result of one Rectify step.
#[derive(Debug, Clone)]
pub struct RectifyOutcome {
    pub coupling: PairedCoupling,
    pub field: FreeVectorField,
    pub report: FitReport,
    pub trajectory: Trajectory,
}

/// Fits the expected velocity on `cpl`'s interpolation and transports `x0`
/// along it; the new coupling pairs the original `x0` rows with the endpoints.
pub fn rectify(
    cpl: &PairedCoupling,
    fm: &FeatureMap,
    fit_cfg: &FitConfig,
    ode_cfg: &IntegratorConfig,
) -> Result<RectifyOutcome> {
    let (field, report) = fit_free_field(cpl, fm, fit_cfg)?;
    let mut trajectory = integrate(&field, &cpl.x0, ode_cfg)?;
    trajectory.provenance = format!("free field; {}", trajectory.provenance);
    Ok(RectifyOutcome {
        coupling: trajectory.endpoints(),
        field,
        report,
        trajectory,
    })
}

/// Result of one c-Rectify step. `report.final_loss` is ℓ̂*.
#[derive(Debug, Clone)]
pub struct CRectifyOutcome {
    pub coupling: PairedCoupling,
    pub potential: PotentialField,
    pub report: FitReport,
    pub trajectory: Trajectory,
}

/// Fits a potential by the matching loss and transports `x0` along
/// `∇c*(∇f)`.
pub fn c_rectify(
    cpl: &PairedCoupling,
    c: &dyn ConvexCost,
    fm: &FeatureMap,
    fit_cfg: &FitConfig,
    ode_cfg: &IntegratorConfig,
) -> Result<CRectifyOutcome> {
    let (potential, report) = fit_potential(cpl, fm, c, fit_cfg)?;
    let drift = PotentialDrift {
        potential: &potential,
        cost: c,
    };
    let mut trajectory = integrate(&drift, &cpl.x0, ode_cfg)?;
    trajectory.provenance = format!("potential drift; {}", trajectory.provenance);
    Ok(CRectifyOutcome {
        coupling: trajectory.endpoints(),
        potential,
        report,
        trajectory,
    })
}

/// Per-iteration diagnostics of the reflow loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub k: usize,
    /// Transport cost of the input coupling, equal to its path-wise cost.
    pub input_cost: f64,
    /// Transport cost of the output coupling.
    pub transport_cost: f64,
    pub ellstar: f64,
    pub straightness: f64,
    pub pathwise_cost: f64,
    /// `ℓ̂* − (F_c(X) − F_c(Z))`.
    pub duality_gap: f64,
    pub marginal_dist_0: f64,
    pub marginal_dist_1: f64,
    pub wall_time: f64,
    pub fit: FitReport,
}

impl IterationRecord {
    /// `(cost_in − cost_out) − (S_c(Z) + ℓ̂*)`.
    pub fn gap_identity_residual(&self) -> f64 {
        (self.input_cost - self.transport_cost) - (self.straightness + self.ellstar)
    }
}

/// Reflow run history; `couplings[0]` is the input.
#[derive(Debug, Clone)]
pub struct ReflowReport {
    pub initial_cost: f64,
    pub records: Vec<IterationRecord>,
    pub couplings: Vec<PairedCoupling>,
    pub potentials: Vec<PotentialField>,
}

pub const CSV_HEADER: &str =
    "k,cost,ellstar,straightness,pathwise_cost,duality_gap,marg0,marg1,seconds";

impl ReflowReport {
    /// `[cost₀, cost₁, …, cost_K]`.
    pub fn cost_sequence(&self) -> Vec<f64> {
        std::iter::once(self.initial_cost)
            .chain(self.records.iter().map(|r| r.transport_cost))
            .collect()
    }

    /// Largest per-step increase `cost_{k+1} − cost_k` (negative when strictly decreasing).
    pub fn max_cost_increase(&self) -> f64 {
        self.cost_sequence()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ_k (ℓ̂*_k + S_c(Zᵏ⁺¹))`.
    pub fn certificate_sum(&self) -> f64 {
        self.records.iter().map(|r| r.ellstar + r.straightness).sum()
    }

    pub fn min_ellstar(&self) -> f64 {
        self.records.iter().map(|r| r.ellstar).fold(f64::INFINITY, f64::min)
    }

    pub fn final_coupling(&self) -> &PairedCoupling {
        self.couplings.last().expect("report holds the input coupling")
    }

    /// One row per iteration with 17 significant digits. Wall times are
    /// written only when `timings` is set, and as 0 otherwise, so the file
    /// is reproducible byte for byte.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let secs = if timings { r.wall_time } else { 0.0 };
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.k,
                r.transport_cost,
                r.ellstar,
                r.straightness,
                r.pathwise_cost,
                r.duality_gap,
                r.marginal_dist_0,
                r.marginal_dist_1,
                secs
            );
        }
        out
    }
}

/// A reflow failure with the iterations completed before it.
#[derive(Debug)]
pub struct ReflowFailure {
    pub partial: ReflowReport,
    pub error: RiftError,
}

impl std::fmt::Display for ReflowFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "reflow stopped after {} iterations: {}",
            self.partial.records.len(),
            self.error
        )
    }
}

impl std::error::Error for ReflowFailure {}

/// Settings for [`reflow`] beyond the fit and integrator configs.
#[derive(Debug, Clone, Default)]
pub struct ReflowOptions<'a> {
    /// Run seed; iteration `k` draws its features from `derive_seed(seed, "features", k)`.
    pub seed: u64,
    /// Fresh marginal samples for the marginal-preservation distances.
    pub references: Option<&'a MarginalReferences>,
}

/// Repeats c-Rectify `iterations` times from `cpl0`, recording diagnostics
/// after every step.
pub fn reflow(
    cpl0: &PairedCoupling,
    c: &dyn ConvexCost,
    iterations: usize,
    features: &FeatureSpec,
    fit_cfg: &FitConfig,
    ode_cfg: &IntegratorConfig,
    opts: &ReflowOptions<'_>,
) -> std::result::Result<ReflowReport, ReflowFailure> {
    let mut report = ReflowReport {
        initial_cost: transport_cost(cpl0, c),
        records: Vec::new(),
        couplings: vec![cpl0.clone()],
        potentials: Vec::new(),
    };
    if iterations == 0 {
        return Err(ReflowFailure {
            partial: report,
            error: RiftError::Construction("reflow needs K >= 1".into()),
        });
    }
    for k in 1..=iterations {
        let started = Instant::now();
        let input = report.final_coupling().clone();
        let step = features
            .build(&input, fit_cfg.time_points, derive_seed(opts.seed, "features", k as u64))
            .and_then(|fm| c_rectify(&input, c, &fm, fit_cfg, ode_cfg));
        let step = match step {
            Ok(s) => s,
            Err(error) => {
                return Err(ReflowFailure {
                    partial: report,
                    error,
                })
            }
        };
        let input_cost = transport_cost(&input, c);
        let out_cost = transport_cost(&step.coupling, c);
        let path = pathwise_cost(&step.trajectory, c);
        let ellstar = step.report.final_loss;
        let (m0, m1) = match opts.references {
            Some(refs) => (refs.distance0(&step.coupling.x0), refs.distance1(&step.coupling.x1)),
            None => (f64::NAN, f64::NAN),
        };
        report.records.push(IterationRecord {
            k,
            input_cost,
            transport_cost: out_cost,
            ellstar,
            straightness: path - out_cost,
            pathwise_cost: path,
            duality_gap: ellstar - (input_cost - path),
            marginal_dist_0: m0,
            marginal_dist_1: m1,
            wall_time: started.elapsed().as_secs_f64(),
            fit: step.report,
        });
        report.couplings.push(step.coupling);
        report.potentials.push(step.potential);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::CostFunction;
    use crate::fields::FnField;
    use crate::synthdata::{sample, DistributionSpec};
    use ndarray::array;

    #[test]
    fn constant_drift_is_exact() {
        let one = FnField::new(1, |_: &[f64], _| vec![1.0]);
        let x0 = array![[0.0]];
        for method in [IntegratorMethod::Euler, IntegratorMethod::Rk4] {
            for steps in [1, 3, 10, 100] {
                let tr = integrate(&one, &x0, &IntegratorConfig { method, steps }).unwrap();
                assert!((tr.end()[[0, 0]] - 1.0).abs() < 1e-12);
                assert_eq!(tr.times.len(), steps + 1);
                assert_eq!(tr.times[0], 0.0);
                assert_eq!(*tr.times.last().unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn rk4_linear_growth_reaches_e() {
        let lin = FnField::new(1, |x: &[f64], _| vec![x[0]]);
        let tr = integrate(&lin, &array![[1.0]], &IntegratorConfig::default()).unwrap();
        assert!((tr.end()[[0, 0]] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn zero_drift_keeps_states() {
        let zero = FnField::new(2, |_: &[f64], _| vec![0.0, 0.0]);
        let x0 = array![[1.0, 2.0], [3.0, -1.0]];
        let tr = integrate(&zero, &x0, &IntegratorConfig::default()).unwrap();
        assert!(tr.states.iter().all(|s| s == &x0));
    }

    #[test]
    fn blow_up_reports_step() {
        let bad = FnField::new(1, |x: &[f64], _| vec![x[0] * x[0] * 1e200]);
        let err = integrate(
            &bad,
            &array![[10.0]],
            &IntegratorConfig {
                method: IntegratorMethod::Euler,
                steps: 10,
            },
        )
        .unwrap_err();
        assert!(matches!(err, RiftError::Integration { step, .. } if step >= 1));
    }

    #[test]
    fn rectify_shift_and_identity_are_fixed() {
        let x0 = sample(&DistributionSpec::standard_normal(1), 300, 1).unwrap().data;
        let fit = FitConfig {
            time_points: 8,
            ..FitConfig::default()
        };
        let spec = FeatureSpec {
            num_features: 64,
            ..FeatureSpec::default()
        };
        let ode = IntegratorConfig {
            method: IntegratorMethod::Rk4,
            steps: 20,
        };
        let ident = PairedCoupling::new(x0.clone(), x0.clone()).unwrap();
        let fm = spec.build(&ident, 8, 3).unwrap();
        let out = rectify(&ident, &fm, &fit, &ode).unwrap();
        let dev = (&out.coupling.x1 - &ident.x1).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(dev <= 1e-6, "{dev}");

        let shift = PairedCoupling::new(x0.clone(), &x0 + 2.0).unwrap();
        let fm = spec.build(&shift, 8, 4).unwrap();
        let out = rectify(&shift, &fm, &fit, &ode).unwrap();
        let dev = (&out.coupling.x1 - &shift.x1).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
        assert!(dev <= 1e-3, "{dev}");
    }

    #[test]
    fn c_rectify_identity_is_a_fixed_point() {
        let x0 = sample(&DistributionSpec::standard_normal(2), 200, 2).unwrap().data;
        let ident = PairedCoupling::new(x0.clone(), x0.clone()).unwrap();
        let fit = FitConfig {
            time_points: 4,
            ..FitConfig::default()
        };
        let ode = IntegratorConfig {
            method: IntegratorMethod::Rk4,
            steps: 10,
        };
        let spec = FeatureSpec {
            num_features: 32,
            ..FeatureSpec::default()
        };
        for c in [CostFunction::Quadratic, CostFunction::power(1.5).unwrap()] {
            let fm = spec.build(&ident, 4, 1).unwrap();
            let out = c_rectify(&ident, &c, &fm, &fit, &ode).unwrap();
            assert!(out.report.final_loss <= 1e-8);
            let dev = (&out.coupling.x1 - &x0).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
            assert!(dev <= 1e-6, "{c}: {dev}");
        }
    }

    #[test]
    fn reflow_with_one_iteration_is_c_rectify() {
        let s0 = sample(&DistributionSpec::standard_normal(1), 200, 1).unwrap();
        let s1 = sample(&DistributionSpec::standard_normal(1), 200, 2).unwrap();
        let cpl = crate::synthdata::independent_coupling(&s0, &s1, 3).unwrap();
        let fit = FitConfig {
            time_points: 4,
            ..FitConfig::default()
        };
        let ode = IntegratorConfig {
            method: IntegratorMethod::Rk4,
            steps: 10,
        };
        let spec = FeatureSpec {
            num_features: 32,
            ..FeatureSpec::default()
        };
        let c = CostFunction::Quadratic;
        let opts = ReflowOptions {
            seed: 9,
            references: None,
        };
        let rep = reflow(&cpl, &c, 1, &spec, &fit, &ode, &opts).unwrap();
        let fm = spec.build(&cpl, 4, derive_seed(9, "features", 1)).unwrap();
        let direct = c_rectify(&cpl, &c, &fm, &fit, &ode).unwrap();
        assert_eq!(rep.records.len(), 1);
        assert_eq!(rep.final_coupling(), &direct.coupling);
        assert_eq!(rep.records[0].ellstar, direct.report.final_loss);
        let csv = rep.to_csv(false);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 9);
        assert!(reflow(&cpl, &c, 0, &spec, &fit, &ode, &opts).is_err());
    }
}
