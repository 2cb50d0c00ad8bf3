//! Measurable quantities of a coupling or flow: transport and path-wise
//! costs, straightness, marginal-preservation statistics, Hamilton–Jacobi
//! residuals, and three independent optimal-transport oracles.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use rayon::prelude::*;

use crate::costs::{dot, norm, ConvexCost};
use crate::error::{Result, RiftError};
use crate::fields::{FeatureMap, PotentialField, VelocityField};
use crate::flow::Trajectory;
use crate::linalg::sqrtm_psd;
use crate::synthdata::{derive_seed, rng_from_seed, sample, time_grid, to_dmatrix, DistributionSpec, PairedCoupling, SampleSet};
use crate::training::{fit_free_field, FitConfig};

/// Named metrics with free-form metadata, ordered by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub values: BTreeMap<String, f64>,
    pub metadata: BTreeMap<String, String>,
}

impl DiagnosticsReport {
    pub fn insert(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn note(&mut self, name: &str, value: impl ToString) {
        self.metadata.insert(name.to_string(), value.to_string());
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn all_finite(&self) -> bool {
        self.values.values().all(|v| v.is_finite())
    }
}

const PARTITIONS: usize = 8;

/// Sums `f` over `PARTITIONS` contiguous ranges of `0..n`, adding the
/// partial sums in range order so results do not depend on thread count.
pub(crate) fn partitioned_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync,
{
    let per = n.div_ceil(PARTITIONS).max(1);
    let parts: Vec<f64> = (0..n.div_ceil(per))
        .into_par_iter()
        .map(|p| f(p * per..((p + 1) * per).min(n)))
        .collect();
    parts.into_iter().sum()
}

fn mean_row_cost(x0: ArrayView2<'_, f64>, x1: ArrayView2<'_, f64>, c: &dyn ConvexCost) -> f64 {
    let n = x0.nrows();
    if n == 0 {
        return 0.0;
    }
    let d = x0.ncols();
    let total = partitioned_sum(n, |r| {
        let mut buf = vec![0.0; d];
        r.map(|i| {
            for k in 0..d {
                buf[k] = x1[[i, k]] - x0[[i, k]];
            }
            c.value(&buf)
        })
        .sum()
    });
    total / n as f64
}

/// `(1/n) Σ c(x1_i − x0_i)`.
pub fn transport_cost(cpl: &PairedCoupling, c: &dyn ConvexCost) -> f64 {
    mean_row_cost(cpl.x0.view(), cpl.x1.view(), c)
}

/// `Σ_k c((x_{k+1} − x_k)/Δt)·Δt`, averaged over particles.
pub fn pathwise_cost(traj: &Trajectory, c: &dyn ConvexCost) -> f64 {
    let n = traj.states[0].nrows();
    if n == 0 {
        return 0.0;
    }
    let d = traj.states[0].ncols();
    let total = partitioned_sum(n, |r| {
        let mut buf = vec![0.0; d];
        let mut acc = 0.0;
        for i in r {
            for k in 0..traj.times.len() - 1 {
                let dt = traj.times[k + 1] - traj.times[k];
                let (a, b) = (&traj.states[k], &traj.states[k + 1]);
                for j in 0..d {
                    buf[j] = (b[[i, j]] - a[[i, j]]) / dt;
                }
                acc += c.value(&buf) * dt;
            }
        }
        acc
    });
    total / n as f64
}

/// Path-wise cost minus the cost of the endpoint coupling.
pub fn straightness(traj: &Trajectory, c: &dyn ConvexCost) -> f64 {
    pathwise_cost(traj, c) - mean_row_cost(traj.start().view(), traj.end().view(), c)
}

/// Unexplained velocity variance `mean ‖Ẋ − v̂(X_t, t)‖²` of the best free
/// field on `cpl`'s interpolation. Zero for straight couplings.
pub fn straightness_gap(cpl: &PairedCoupling, fm: &FeatureMap, cfg: &FitConfig) -> Result<f64> {
    Ok(fit_free_field(cpl, fm, cfg)?.1.final_loss)
}

/// [`straightness_gap`] divided by `mean ‖X1 − X0‖²`.
pub fn normalized_straightness_gap(
    cpl: &PairedCoupling,
    fm: &FeatureMap,
    cfg: &FitConfig,
) -> Result<f64> {
    let gap = straightness_gap(cpl, fm, cfg)?;
    let energy = cpl.displacements().iter().map(|v| v * v).sum::<f64>() / cpl.len() as f64;
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok(gap / energy)
}

/// Positions `X_t` of `cpl`'s linear interpolation on the midpoint grid.
pub fn interpolation_slices(cpl: &PairedCoupling, time_points: usize) -> Vec<(f64, Array2<f64>)> {
    time_grid(time_points)
        .into_iter()
        .map(|t| (t, &cpl.x1 * t + &cpl.x0 * (1.0 - t)))
        .collect()
}

/// Weak-form test of `∫ E[∇h(X_t)ᵀ r(X_t, t)] dt = 0` over `tests` random
/// test functions `h(x) = cos(wᵀx + b)`, with `w` scaled to the spread of
/// the positions. Returns the largest `|mean ∇hᵀr| / mean ‖∇h‖‖r‖`, or 0
/// when `r` vanishes on every point.
pub fn marginal_preservation(
    residual: &dyn VelocityField,
    slices: &[(f64, Array2<f64>)],
    tests: usize,
    seed: u64,
) -> Result<f64> {
    let d = residual.dim();
    if slices.iter().any(|(_, x)| x.ncols() != d) {
        return Err(RiftError::SizeMismatch(
            "positions and residual field differ in dimension".into(),
        ));
    }
    let count: usize = slices.iter().map(|(_, x)| x.nrows()).sum();
    if count == 0 || tests == 0 {
        return Ok(0.0);
    }
    let mut spread = 0.0;
    for (_, x) in slices {
        let mean = x.mean_axis(ndarray::Axis(0)).expect("nonempty");
        spread += (x - &mean).iter().map(|v| v * v).sum::<f64>();
    }
    let scale = (spread / (count * d) as f64).sqrt().max(1e-12);

    let mut rng = rng_from_seed(seed);
    let phase = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
    let freqs: Vec<(Vec<f64>, f64)> = (0..tests)
        .map(|_| {
            let w = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal) / scale)
                .collect();
            (w, rng.sample(phase))
        })
        .collect();

    let mut num = vec![0.0; tests];
    let mut den = vec![0.0; tests];
    for (t, x) in slices {
        let r = residual.velocity_batch(x.view(), *t);
        for (xr, rr) in x.rows().into_iter().zip(r.rows()) {
            let xr = xr.as_slice().expect("standard layout");
            let rr = rr.to_vec();
            let rn = norm(&rr);
            for (h, (w, b)) in freqs.iter().enumerate() {
                let s = -(dot(w, xr) + b).sin();
                num[h] += s * dot(w, &rr);
                den[h] += s.abs() * norm(w) * rn;
            }
        }
    }
    Ok(num
        .iter()
        .zip(&den)
        .map(|(n, d)| if *d > 0.0 { n.abs() / d } else { 0.0 })
        .fold(0.0, f64::max))
}

/// `(1/(n_a n_b)) Σ_ij ‖a_i − b_j‖`.
pub(crate) fn mean_pair_distance(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let (na, nb) = (a.nrows(), b.nrows());
    if na == 0 || nb == 0 {
        return 0.0;
    }
    let total = partitioned_sum(na, |r| {
        let mut acc = 0.0;
        for i in r {
            let ai = a.row(i);
            for bj in b.rows() {
                acc += ai
                    .iter()
                    .zip(bj.iter())
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
            }
        }
        acc
    });
    total / (na * nb) as f64
}

fn sample_order(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> std::cmp::Ordering {
    a.nrows().cmp(&b.nrows()).then_with(|| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

fn energy_from_terms(cross: f64, self_a: f64, self_b: f64) -> f64 {
    (2.0 * cross - self_a - self_b).max(0.0)
}

/// Two-sample energy statistic `2E‖A−B‖ − E‖A−A′‖ − E‖B−B′‖` with all
/// pairs averaged (V-statistic), so it is nonnegative and exactly 0 for
/// identical multisets.
pub fn energy_distance(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    energy_distance_views(a.data.view(), b.data.view())
}

pub fn energy_distance_views(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(RiftError::SizeMismatch(format!(
            "samples have d = {} and d = {}",
            a.ncols(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(RiftError::Construction("energy distance needs nonempty samples".into()));
    }
    // canonical argument order makes the result bitwise symmetric
    let (a, b) = if sample_order(a, b) == std::cmp::Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    Ok(energy_from_terms(
        mean_pair_distance(a, b),
        mean_pair_distance(a, a),
        mean_pair_distance(b, b),
    ))
}

#[derive(Debug)]
struct Reference {
    data: Array2<f64>,
    self_term: f64,
}

impl Reference {
    fn new(data: Array2<f64>) -> Reference {
        let self_term = mean_pair_distance(data.view(), data.view());
        Reference { data, self_term }
    }

    fn distance(&self, x: ArrayView2<'_, f64>, x_self: f64) -> f64 {
        energy_from_terms(mean_pair_distance(x, self.data.view()), x_self, self.self_term)
    }
}

/// Fresh reference draws from both marginals for the per-iteration
/// marginal-preservation check. Each distance and each baseline is an
/// average over `reps` independent reference sets of the same size.
#[derive(Debug)]
pub struct MarginalReferences {
    source: Vec<Reference>,
    target: Vec<Reference>,
    /// Mean energy distance between two independent same-size source draws.
    pub baseline0: f64,
    /// Mean energy distance between two independent same-size target draws.
    pub baseline1: f64,
}

impl MarginalReferences {
    pub fn draw(
        source: &DistributionSpec,
        target: &DistributionSpec,
        n: usize,
        reps: usize,
        seed: u64,
    ) -> Result<MarginalReferences> {
        let reps = reps.max(1);
        let side = |spec: &DistributionSpec, label: &str| -> Result<(Vec<Reference>, f64)> {
            let mut refs = Vec::with_capacity(reps);
            let mut base = 0.0;
            for r in 0..reps {
                let reference =
                    Reference::new(sample(spec, n, derive_seed(seed, label, 2 * r as u64))?.data);
                let other = sample(spec, n, derive_seed(seed, label, 2 * r as u64 + 1))?.data;
                let other_self = mean_pair_distance(other.view(), other.view());
                base += reference.distance(other.view(), other_self);
                refs.push(reference);
            }
            Ok((refs, base / reps as f64))
        };
        let (source_refs, baseline0) = side(source, "reference0")?;
        let (target_refs, baseline1) = side(target, "reference1")?;
        Ok(MarginalReferences {
            source: source_refs,
            target: target_refs,
            baseline0,
            baseline1,
        })
    }

    fn mean_distance(refs: &[Reference], x: &Array2<f64>) -> f64 {
        let x_self = mean_pair_distance(x.view(), x.view());
        refs.iter().map(|r| r.distance(x.view(), x_self)).sum::<f64>() / refs.len() as f64
    }

    /// Mean energy distance of `x` to the source references.
    pub fn distance0(&self, x: &Array2<f64>) -> f64 {
        Self::mean_distance(&self.source, x)
    }

    /// Mean energy distance of `x` to the target references.
    pub fn distance1(&self, x: &Array2<f64>) -> f64 {
        Self::mean_distance(&self.target, x)
    }
}

const FD_STEP: f64 = 1e-4;

fn hj_value(pf: &PotentialField, c: &dyn ConvexCost, x: &[f64], t: f64) -> f64 {
    pf.time_derivative(x, t) + c.conjugate(&pf.gradient(x, t))
}

/// Mean and max over `points` of `‖∇_x h‖`, where
/// `h = ∂_t f + c*(∇_x f)` and the gradient is taken by central differences.
pub fn hj_residual(
    pf: &PotentialField,
    c: &dyn ConvexCost,
    points: &[(Vec<f64>, f64)],
) -> Result<(f64, f64)> {
    let d = pf.features.dim();
    if points.is_empty() {
        return Err(RiftError::Construction("no evaluation points".into()));
    }
    if points.iter().any(|(x, _)| x.len() != d) {
        return Err(RiftError::SizeMismatch("evaluation point has wrong dimension".into()));
    }
    let mags: Vec<f64> = points
        .par_iter()
        .map(|(x, t)| {
            let mut y = x.clone();
            let mut sq = 0.0;
            for k in 0..d {
                y[k] = x[k] + FD_STEP;
                let up = hj_value(pf, c, &y, *t);
                y[k] = x[k] - FD_STEP;
                let down = hj_value(pf, c, &y, *t);
                y[k] = x[k];
                let g = (up - down) / (2.0 * FD_STEP);
                sq += g * g;
            }
            sq.sqrt()
        })
        .collect();
    let mean = mags.iter().sum::<f64>() / mags.len() as f64;
    let max = mags.iter().copied().fold(0.0, f64::max);
    Ok((mean, max))
}

/// A regular lattice with `points` nodes per axis spanning `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
}

impl Lattice {
    fn nodes(&self) -> Vec<Vec<f64>> {
        let axis = |k: usize| -> Vec<f64> {
            if self.points == 1 {
                return vec![0.5 * (self.lo[k] + self.hi[k])];
            }
            (0..self.points)
                .map(|i| self.lo[k] + (self.hi[k] - self.lo[k]) * i as f64 / (self.points - 1) as f64)
                .collect()
        };
        match self.lo.len() {
            1 => axis(0).into_iter().map(|a| vec![a]).collect(),
            _ => {
                let (a0, a1) = (axis(0), axis(1));
                a0.iter()
                    .flat_map(|&u| a1.iter().map(move |&v| vec![u, v]))
                    .collect()
            }
        }
    }
}

/// Hopf–Lax consistency `f_t(y) ≈ min_{y0} [t·c((y − y0)/t) + f_0(y0)]`,
/// with the minimum over `grid`. A potential is determined up to a
/// time-dependent constant, so the mean difference over probes is removed
/// before taking the max; the result is normalized by the range of `f_t`
/// over the probes.
pub fn hopflax_gap(
    pf: &PotentialField,
    c: &dyn ConvexCost,
    t: f64,
    probes: &[Vec<f64>],
    grid: &Lattice,
) -> Result<f64> {
    let d = pf.features.dim();
    if d > 2 {
        return Err(RiftError::Unsupported(format!(
            "Hopf-Lax grid minimization supports d <= 2, got d = {d}"
        )));
    }
    if !(0.1..=1.0).contains(&t) {
        return Err(RiftError::Domain(format!("t must lie in [0.1, 1], got {t}")));
    }
    if grid.lo.len() != d || grid.hi.len() != d || grid.points == 0 {
        return Err(RiftError::Construction("lattice does not match the field dimension".into()));
    }
    if probes.is_empty() || probes.iter().any(|p| p.len() != d) {
        return Err(RiftError::Construction("probes must be nonempty d-vectors".into()));
    }
    let nodes = grid.nodes();
    let f0: Vec<f64> = nodes.par_iter().map(|y0| pf.value(y0, 0.0)).collect();
    let diffs: Vec<(f64, f64)> = probes
        .par_iter()
        .map(|y| {
            let mut buf = vec![0.0; d];
            let mut best = f64::INFINITY;
            for (y0, f) in nodes.iter().zip(&f0) {
                for k in 0..d {
                    buf[k] = (y[k] - y0[k]) / t;
                }
                best = best.min(t * c.value(&buf) + f);
            }
            let ft = pf.value(y, t);
            (ft, ft - best)
        })
        .collect();
    let mean = diffs.iter().map(|p| p.1).sum::<f64>() / diffs.len() as f64;
    let gap = diffs.iter().map(|p| (p.1 - mean).abs()).fold(0.0, f64::max);
    let lo = diffs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = diffs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    Ok(if range > 1e-12 { gap / range } else { gap })
}

fn check_pair(s0: &SampleSet, s1: &SampleSet) -> Result<()> {
    if s0.len() != s1.len() {
        return Err(RiftError::SizeMismatch(format!(
            "sample sizes differ: {} vs {}",
            s0.len(),
            s1.len()
        )));
    }
    if s0.dim() != s1.dim() {
        return Err(RiftError::SizeMismatch(format!(
            "dimensions differ: {} vs {}",
            s0.dim(),
            s1.dim()
        )));
    }
    if s0.is_empty() {
        return Err(RiftError::Construction("empty samples".into()));
    }
    Ok(())
}

/// Sorted rank-to-rank pairing in 1D, optimal for every convex cost.
pub fn oracle_quantile_1d(s0: &SampleSet, s1: &SampleSet, c: &dyn ConvexCost) -> Result<f64> {
    check_pair(s0, s1)?;
    if s0.dim() != 1 {
        return Err(RiftError::Unsupported(format!(
            "quantile oracle is 1D only, got d = {}",
            s0.dim()
        )));
    }
    let sorted = |s: &SampleSet| {
        let mut v: Vec<f64> = s.data.column(0).to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b) = (sorted(s0), sorted(s1));
    let total: f64 = a.iter().zip(&b).map(|(x, y)| c.value(&[y - x])).sum();
    Ok(total / a.len() as f64)
}

pub const HUNGARIAN_MAX_N: usize = 512;

/// Exact discrete optimum `min_σ (1/n) Σ c(x1_σ(i) − x0_i)` by the
/// shortest-augmenting-path assignment algorithm. Returns the cost and
/// `σ` with `σ[i]` the target row matched to source row `i`.
pub fn oracle_hungarian(
    s0: &SampleSet,
    s1: &SampleSet,
    c: &dyn ConvexCost,
) -> Result<(f64, Vec<usize>)> {
    check_pair(s0, s1)?;
    let n = s0.len();
    if n > HUNGARIAN_MAX_N {
        return Err(RiftError::Unsupported(format!(
            "assignment oracle is limited to n <= {HUNGARIAN_MAX_N}, got {n}"
        )));
    }
    let d = s0.dim();
    let cost: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / n, ij % n);
            let diff: Vec<f64> = (0..d).map(|k| s1.data[[j, k]] - s0.data[[i, k]]).collect();
            c.value(&diff)
        })
        .collect();
    let a = |i: usize, j: usize| cost[(i - 1) * n + (j - 1)];

    // 1-based potentials; p[j] is the row assigned to column j, 0 = free.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| a(i + 1, j + 1)).sum();
    Ok((total / n as f64, assignment))
}

fn check_psd(m: &DMatrix<f64>, name: &str) -> Result<()> {
    let sym = (m + m.transpose()) * 0.5;
    let scale = m.abs().max().max(1.0);
    if (m - &sym).abs().max() > 1e-10 * scale {
        return Err(RiftError::Domain(format!("{name} is not symmetric")));
    }
    if sym.symmetric_eigenvalues().iter().any(|&l| l < -1e-10 * scale) {
        return Err(RiftError::Domain(format!("{name} is not positive semidefinite")));
    }
    Ok(())
}

/// Closed-form `½‖·‖²` optimum between Gaussians:
/// `½[‖μ1 − μ0‖² + tr(Σ0 + Σ1 − 2(Σ1^½ Σ0 Σ1^½)^½)]`.
pub fn oracle_gauss_quadratic(
    mean0: &[f64],
    cov0: &[Vec<f64>],
    mean1: &[f64],
    cov1: &[Vec<f64>],
) -> Result<f64> {
    let d = mean0.len();
    if d == 0
        || mean1.len() != d
        || cov0.len() != d
        || cov1.len() != d
        || cov0.iter().chain(cov1).any(|r| r.len() != d)
    {
        return Err(RiftError::SizeMismatch("means and covariances disagree in dimension".into()));
    }
    let (s0, s1) = (to_dmatrix(cov0), to_dmatrix(cov1));
    check_psd(&s0, "cov0")?;
    check_psd(&s1, "cov1")?;
    let r1 = sqrtm_psd(&s1);
    let cross = sqrtm_psd(&(&r1 * &s0 * &r1));
    let mean_term: f64 = mean0.iter().zip(mean1).map(|(a, b)| (b - a) * (b - a)).sum();
    let trace = (&s0 + &s1 - cross * 2.0).trace();
    Ok(0.5 * (mean_term + trace.max(0.0)))
}

/// Hungarian optima of `replicates` independent `n`-sample instances of the
/// pair. A single instance fluctuates by several percent at `n = 512`, so
/// agreement with a population optimum is judged on the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct HungarianReplicates {
    pub values: Vec<f64>,
}

impl HungarianReplicates {
    pub fn draw(
        source: &DistributionSpec,
        target: &DistributionSpec,
        c: &dyn ConvexCost,
        n: usize,
        replicates: usize,
        seed: u64,
    ) -> Result<HungarianReplicates> {
        if replicates == 0 {
            return Err(RiftError::Domain("replicates must be at least 1".into()));
        }
        let solve = |r: usize| -> Result<f64> {
            let a = sample(source, n, derive_seed(seed, "replicate_source", r as u64))?;
            let b = sample(target, n, derive_seed(seed, "replicate_target", r as u64))?;
            Ok(oracle_hungarian(&a, &b, c)?.0)
        };
        let values = (0..replicates)
            .into_par_iter()
            .map(solve)
            .collect::<Result<Vec<f64>>>()?;
        Ok(HungarianReplicates { values })
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Smallest and largest single-instance value.
    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}
