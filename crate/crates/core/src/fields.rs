//! Random Fourier feature approximators over `(x, t)`.
//!
//! A [`FeatureMap`] holds `M` cosine features
//! `φ_j(x, t) = √(2/M) · cos(ω_jᵀx + ω_{t,j}·t + b_j)`, optionally followed by
//! an affine block `(1, x_1, …, x_d, t)`. Scalar potentials `f = θᵀφ` and free
//! vector fields `v = Θᵀφ` are linear in their coefficients, and every
//! derivative used downstream (`∇_x f`, `∂_t f`) is analytic.

use std::fmt::Write as _;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::costs::ConvexCost;
use crate::error::{Result, RiftError};
use crate::synthdata::rng_from_seed;

/// Frequencies, phases and bandwidths of a random feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    /// `M × d` spatial frequencies.
    pub omega: Array2<f64>,
    /// `M` time frequencies.
    pub omega_t: Array1<f64>,
    /// `M` phases in `[0, 2π)`.
    pub phase: Array1<f64>,
    pub bandwidth_x: f64,
    pub bandwidth_t: f64,
    /// Append the block `(1, x_1, …, x_d, t)` after the cosine features.
    pub affine: bool,
    pub seed: u64,
}

/// Draws `Omega ~ N(0, bw_x⁻² I)`, `omega_t ~ N(0, bw_t⁻²)`, `b ~ U[0, 2π)`.
pub fn build_features(
    dim: usize,
    m: usize,
    bandwidth_x: f64,
    bandwidth_t: f64,
    seed: u64,
) -> Result<FeatureMap> {
    if m == 0 || dim == 0 {
        return Err(RiftError::Construction(
            "feature map needs M >= 1 and d >= 1".into(),
        ));
    }
    if !(bandwidth_x > 0.0 && bandwidth_t > 0.0 && bandwidth_x.is_finite() && bandwidth_t.is_finite())
    {
        return Err(RiftError::Construction(format!(
            "bandwidths must be positive and finite, got {bandwidth_x} and {bandwidth_t}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut omega = Array2::zeros((m, dim));
    for v in omega.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = z / bandwidth_x;
    }
    let omega_t = Array1::from_shape_fn(m, |_| {
        let z: f64 = rng.sample(StandardNormal);
        z / bandwidth_t
    });
    let uniform = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
    let phase = Array1::from_shape_fn(m, |_| rng.sample(uniform));
    Ok(FeatureMap {
        omega,
        omega_t,
        phase,
        bandwidth_x,
        bandwidth_t,
        affine: false,
        seed,
    })
}

impl FeatureMap {
    pub fn with_affine(mut self, affine: bool) -> Self {
        self.affine = affine;
        self
    }

    /// Number of random cosine features `M`.
    pub fn num_random(&self) -> usize {
        self.omega.nrows()
    }

    pub fn dim(&self) -> usize {
        self.omega.ncols()
    }

    /// Total feature count, including the affine block.
    pub fn len(&self) -> usize {
        self.num_random() + if self.affine { self.dim() + 2 } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn scale(&self) -> f64 {
        (2.0 / self.num_random() as f64).sqrt()
    }

    fn args_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let w = self.omega.row(j);
            let mut a = self.omega_t[j] * t + self.phase[j];
            for (wk, xk) in w.iter().zip(x) {
                a += wk * xk;
            }
            *o = a;
        }
    }

    /// Phase arguments for a batch of points sharing the time `t`.
    pub(crate) fn args_batch(&self, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
        let mut a = x.dot(&self.omega.t());
        let shift = &self.omega_t * t + &self.phase;
        a += &shift.view().insert_axis(Axis(0));
        a
    }

    pub fn features(&self, x: &[f64], t: f64) -> Vec<f64> {
        let m = self.num_random();
        let mut out = vec![0.0; self.len()];
        self.args_into(x, t, &mut out[..m]);
        let s = self.scale();
        out[..m].iter_mut().for_each(|a| *a = s * a.cos());
        if self.affine {
            out[m] = 1.0;
            out[m + 1..m + 1 + self.dim()].copy_from_slice(x);
            out[m + 1 + self.dim()] = t;
        }
        out
    }

    /// `P × d` matrix of `∂φ_j / ∂x_k`.
    pub fn features_grad_x(&self, x: &[f64], t: f64) -> Array2<f64> {
        let m = self.num_random();
        let d = self.dim();
        let mut args = vec![0.0; m];
        self.args_into(x, t, &mut args);
        let s = self.scale();
        let mut g = Array2::zeros((self.len(), d));
        for j in 0..m {
            let sn = -s * args[j].sin();
            for k in 0..d {
                g[[j, k]] = sn * self.omega[[j, k]];
            }
        }
        if self.affine {
            for k in 0..d {
                g[[m + 1 + k, k]] = 1.0;
            }
        }
        g
    }

    /// `∂φ_j / ∂t`.
    pub fn features_dt(&self, x: &[f64], t: f64) -> Vec<f64> {
        let m = self.num_random();
        let mut out = vec![0.0; self.len()];
        self.args_into(x, t, &mut out[..m]);
        let s = self.scale();
        for j in 0..m {
            out[j] = -s * out[j].sin() * self.omega_t[j];
        }
        if self.affine {
            out[m + 1 + self.dim()] = 1.0;
        }
        out
    }
}

/// Median of pairwise Euclidean distances over an evenly strided subsample
/// of at most `max_points` rows.
pub fn median_pairwise_distance(points: ArrayView2<'_, f64>, max_points: usize) -> f64 {
    let n = points.nrows();
    if n < 2 {
        return 1.0;
    }
    let take = n.min(max_points.max(2));
    let idx: Vec<usize> = (0..take).map(|i| i * n / take).collect();
    let mut dists = Vec::with_capacity(take * (take - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let d2: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(u, v)| (u - v) * (u - v))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(|a, b| a.total_cmp(b));
    let med = dists[dists.len() / 2];
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// A batched velocity field `(x, t) ↦ v(x, t)`.
pub trait VelocityField: Sync {
    fn dim(&self) -> usize;

    /// Velocities at each row of `x`, all at time `t`.
    fn velocity_batch(&self, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64>;

    fn velocity(&self, x: &[f64], t: f64) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        self.velocity_batch(view, t).row(0).to_vec()
    }
}

/// Wraps a pointwise closure as a [`VelocityField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> VelocityField for FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn velocity_batch(&self, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
        let mut out = Array2::zeros(x.dim());
        for (row, mut o) in x.rows().into_iter().zip(out.rows_mut()) {
            let v = (self.f)(&row.to_vec(), t);
            o.assign(&ArrayView1::from(&v[..]));
        }
        out
    }
}

/// Scalar potential `f(x, t) = θᵀφ(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub features: FeatureMap,
    pub theta: Array1<f64>,
}

impl PotentialField {
    pub fn new(features: FeatureMap, theta: Array1<f64>) -> Result<Self> {
        if theta.len() != features.len() {
            return Err(RiftError::SizeMismatch(format!(
                "theta has {} entries for {} features",
                theta.len(),
                features.len()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(RiftError::Construction("theta has non-finite entries".into()));
        }
        Ok(PotentialField { features, theta })
    }

    pub fn zeros(features: FeatureMap) -> Self {
        let theta = Array1::zeros(features.len());
        PotentialField { features, theta }
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        self.features.features(x, t).iter().zip(&self.theta).map(|(a, b)| a * b).sum()
    }

    /// `∇_x f(x, t)`.
    pub fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.features.features_grad_x(x, t).t().dot(&self.theta).to_vec()
    }

    /// `∂_t f(x, t)`.
    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        self.features.features_dt(x, t).iter().zip(&self.theta).map(|(a, b)| a * b).sum()
    }

    /// `∇_x f` at every row of `x`.
    pub fn gradient_batch(&self, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
        let fm = &self.features;
        let m = fm.num_random();
        let d = fm.dim();
        let mut coef = fm.args_batch(x, t);
        let s = fm.scale();
        let th = self.theta.slice(s![..m]);
        for mut row in coef.rows_mut() {
            for (a, w) in row.iter_mut().zip(th.iter()) {
                *a = -s * a.sin() * w;
            }
        }
        let mut g = coef.dot(&fm.omega);
        if fm.affine {
            let lin = self.theta.slice(s![m + 1..m + 1 + d]);
            g += &lin.insert_axis(Axis(0));
        }
        g
    }
}

/// `∇_x f` of `pf`, backed by the checked pointwise evaluation.
pub fn potential_grad(pf: &PotentialField, x: &[f64], t: f64) -> Vec<f64> {
    pf.gradient(x, t)
}

/// `∇c*(∇_x f(x, t))`, the c-rectified drift.
pub fn drift_from_potential(c: &dyn ConvexCost, pf: &PotentialField, x: &[f64], t: f64) -> Vec<f64> {
    c.conjugate_gradient(&pf.gradient(x, t))
}

/// The drift `∇c* ∘ ∇f` as a [`VelocityField`].
pub struct PotentialDrift<'a> {
    pub potential: &'a PotentialField,
    pub cost: &'a dyn ConvexCost,
}

impl VelocityField for PotentialDrift<'_> {
    fn dim(&self) -> usize {
        self.potential.features.dim()
    }

    fn velocity_batch(&self, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
        let mut g = self.potential.gradient_batch(x, t);
        let mut buf = vec![0.0; g.ncols()];
        for mut row in g.rows_mut() {
            let r = row.as_slice_mut().expect("standard layout");
            self.cost.conjugate_gradient_into(r, &mut buf);
            r.copy_from_slice(&buf);
        }
        g
    }
}

/// Free vector field `v(x, t) = Θᵀφ(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeVectorField {
    pub features: FeatureMap,
    /// `P × d` coefficients.
    pub theta: Array2<f64>,
}

impl FreeVectorField {
    pub fn new(features: FeatureMap, theta: Array2<f64>) -> Result<Self> {
        if theta.dim() != (features.len(), features.dim()) {
            return Err(RiftError::SizeMismatch(format!(
                "Theta has shape {:?}, expected {:?}",
                theta.dim(),
                (features.len(), features.dim())
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(RiftError::Construction("Theta has non-finite entries".into()));
        }
        Ok(FreeVectorField { features, theta })
    }

    pub fn zeros(features: FeatureMap) -> Self {
        let theta = Array2::zeros((features.len(), features.dim()));
        FreeVectorField { features, theta }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        let phi = Array1::from(self.features.features(x, t));
        self.theta.t().dot(&phi).to_vec()
    }
}

/// `Θᵀφ(x, t)`.
pub fn free_eval(fv: &FreeVectorField, x: &[f64], t: f64) -> Vec<f64> {
    fv.eval(x, t)
}

impl VelocityField for FreeVectorField {
    fn dim(&self) -> usize {
        self.features.dim()
    }

    fn velocity_batch(&self, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
        let fm = &self.features;
        let m = fm.num_random();
        let d = fm.dim();
        let s = fm.scale();
        let phi = fm.args_batch(x, t).mapv_into(|a| s * a.cos());
        let mut v = phi.dot(&self.theta.slice(s![..m, ..]));
        if fm.affine {
            let c = self.theta.row(m);
            let lin = self.theta.slice(s![m + 1..m + 1 + d, ..]);
            let tt = self.theta.row(m + 1 + d);
            v += &x.dot(&lin);
            v += &(&c + &(&tt * t)).insert_axis(Axis(0));
        }
        v
    }
}

/// `r = v_free − ∇c*(∇f)`, the part of the expected velocity that
/// c-rectification discards.
pub struct ResidualField<'a> {
    pub free: &'a FreeVectorField,
    pub drift: PotentialDrift<'a>,
}

impl VelocityField for ResidualField<'_> {
    fn dim(&self) -> usize {
        self.free.dim()
    }

    fn velocity_batch(&self, x: ArrayView2<'_, f64>, t: f64) -> Array2<f64> {
        self.free.velocity_batch(x, t) - self.drift.velocity_batch(x, t)
    }
}

// ---------------------------------------------------------------------------
// Text persistence:
//   riftort-field v1 kind=<potential|free> d=<d> M=<M> affine=<0|1> bandwidth_x=.. bandwidth_t=.. seed=..
//   one line per Omega row, then omega_t, b, and theta (or one line per Theta row).

/// A persisted field of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredField {
    Potential(PotentialField),
    Free(FreeVectorField),
}

fn push_line<'a>(out: &mut String, vals: impl IntoIterator<Item = &'a f64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

fn header(kind: &str, fm: &FeatureMap) -> String {
    format!(
        "riftort-field v1 kind={kind} d={} M={} affine={} bandwidth_x={:.16e} bandwidth_t={:.16e} seed={}\n",
        fm.dim(),
        fm.num_random(),
        u8::from(fm.affine),
        fm.bandwidth_x,
        fm.bandwidth_t,
        fm.seed
    )
}

fn push_features(out: &mut String, fm: &FeatureMap) {
    for row in fm.omega.rows() {
        push_line(out, row.iter());
    }
    push_line(out, fm.omega_t.iter());
    push_line(out, fm.phase.iter());
}

impl PotentialField {
    pub fn to_text(&self) -> String {
        let mut out = header("potential", &self.features);
        push_features(&mut out, &self.features);
        push_line(&mut out, self.theta.iter());
        out
    }
}

impl FreeVectorField {
    pub fn to_text(&self) -> String {
        let mut out = header("free", &self.features);
        push_features(&mut out, &self.features);
        for row in self.theta.rows() {
            push_line(&mut out, row.iter());
        }
        out
    }
}

impl StoredField {
    pub fn to_text(&self) -> String {
        match self {
            StoredField::Potential(p) => p.to_text(),
            StoredField::Free(f) => f.to_text(),
        }
    }

    pub fn parse(text: &str) -> Result<StoredField> {
        let mut lines = text.lines().enumerate();
        let (_, head) = lines
            .next()
            .ok_or_else(|| RiftError::parse(1, 1, "empty field file"))?;
        let mut tokens = head.split_whitespace();
        if tokens.next() != Some("riftort-field") || tokens.next() != Some("v1") {
            return Err(RiftError::parse(1, 1, "expected header `riftort-field v1`"));
        }
        let mut kind = None;
        let (mut d, mut m) = (None, None);
        let mut affine = false;
        let (mut bx, mut bt, mut seed) = (1.0, 1.0, 0u64);
        for tok in tokens {
            let col = head.find(tok).unwrap_or(0) + 1;
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| RiftError::parse(1, col, format!("bad header token {tok:?}")))?;
            let bad = || RiftError::parse(1, col, format!("bad value in {tok:?}"));
            match k {
                "kind" => kind = Some(v.to_string()),
                "d" => d = Some(v.parse::<usize>().map_err(|_| bad())?),
                "M" => m = Some(v.parse::<usize>().map_err(|_| bad())?),
                "affine" => affine = v == "1",
                "bandwidth_x" => bx = v.parse().map_err(|_| bad())?,
                "bandwidth_t" => bt = v.parse().map_err(|_| bad())?,
                "seed" => seed = v.parse().map_err(|_| bad())?,
                _ => {}
            }
        }
        let d = d.ok_or_else(|| RiftError::parse(1, 1, "header lacks d="))?;
        let m = m.ok_or_else(|| RiftError::parse(1, 1, "header lacks M="))?;
        let mut next_row = |want: usize| -> Result<Vec<f64>> {
            let (i, line) = lines
                .next()
                .ok_or_else(|| RiftError::parse(0, 1, "unexpected end of field file"))?;
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| RiftError::parse(i + 1, 1, e.to_string()))?;
            if vals.len() != want {
                return Err(RiftError::parse(
                    i + 1,
                    1,
                    format!("expected {want} values, found {}", vals.len()),
                ));
            }
            Ok(vals)
        };
        let mut omega = Array2::zeros((m, d));
        for j in 0..m {
            omega.row_mut(j).assign(&Array1::from(next_row(d)?));
        }
        let omega_t = Array1::from(next_row(m)?);
        let phase = Array1::from(next_row(m)?);
        let fm = FeatureMap {
            omega,
            omega_t,
            phase,
            bandwidth_x: bx,
            bandwidth_t: bt,
            affine,
            seed,
        };
        let p = fm.len();
        match kind.as_deref() {
            Some("potential") => {
                let theta = Array1::from(next_row(p)?);
                Ok(StoredField::Potential(PotentialField::new(fm, theta)?))
            }
            Some("free") => {
                let mut theta = Array2::zeros((p, d));
                for j in 0..p {
                    theta.row_mut(j).assign(&Array1::from(next_row(d)?));
                }
                Ok(StoredField::Free(FreeVectorField::new(fm, theta)?))
            }
            _ => Err(RiftError::parse(1, 1, "header kind must be potential or free")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::CostFunction;
    use ndarray::array;

    fn fm(d: usize, m: usize, seed: u64) -> FeatureMap {
        build_features(d, m, 1.3, 0.7, seed).unwrap()
    }

    #[test]
    fn deterministic_construction() {
        assert_eq!(fm(2, 16, 5), fm(2, 16, 5));
        assert_ne!(fm(2, 16, 5), fm(2, 16, 6));
        assert!(build_features(2, 0, 1.0, 1.0, 0).is_err());
        assert!(build_features(2, 4, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn single_feature_is_bounded() {
        let f = fm(3, 1, 2);
        for k in 0..50 {
            let x = [k as f64 * 0.37, -1.0, 2.0];
            let phi = f.features(&x, 0.3);
            assert_eq!(phi.len(), 1);
            assert!(phi[0].abs() <= 2f64.sqrt());
        }
    }

    #[test]
    fn frequency_column_means_are_small() {
        let bw = 1.7;
        let f = build_features(2, 256, bw, 0.5, 7).unwrap();
        let means = f.omega.mean_axis(Axis(0)).unwrap();
        let bound = 4.0 / (16.0 * bw);
        assert!(means.iter().all(|m| m.abs() <= bound), "{means:?}");
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let f = fm(2, 32, 3).with_affine(true);
        let x = [0.4, -0.8];
        let t = 0.35;
        let h = 1e-5;
        let g = f.features_grad_x(&x, t);
        let dt = f.features_dt(&x, t);
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm_) = (f.features(&xp, t), f.features(&xm, t));
            for j in 0..f.len() {
                let fd = (fp[j] - fm_[j]) / (2.0 * h);
                assert!((fd - g[[j, k]]).abs() <= 1e-6 * (1.0 + g[[j, k]].abs()));
            }
        }
        let (fp, fm_) = (f.features(&x, t + h), f.features(&x, t - h));
        for j in 0..f.len() {
            let fd = (fp[j] - fm_[j]) / (2.0 * h);
            assert!((fd - dt[j]).abs() <= 1e-6 * (1.0 + dt[j].abs()));
        }
    }

    #[test]
    fn zero_frequencies_give_constant_features() {
        let mut f = fm(2, 8, 1);
        f.omega.fill(0.0);
        let a = f.features(&[0.0, 0.0], 0.5);
        let b = f.features(&[3.0, -2.0], 0.5);
        assert_eq!(a, b);
        assert!(f.features_grad_x(&[1.0, 1.0], 0.5).iter().all(|&v| v == 0.0));
        let mut f = fm(2, 8, 1);
        f.omega_t.fill(0.0);
        assert!(f.features_dt(&[1.0, 2.0], 0.2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn potential_gradient_properties() {
        let f = fm(2, 24, 9).with_affine(true);
        let zero = PotentialField::zeros(f.clone());
        assert_eq!(zero.gradient(&[0.3, 0.1], 0.4), vec![0.0, 0.0]);
        let theta = Array1::from_shape_fn(f.len(), |j| (j as f64 * 0.7).sin());
        let pf = PotentialField::new(f.clone(), theta.clone()).unwrap();
        let pf2 = PotentialField::new(f, &theta * 2.0).unwrap();
        let x = [0.2, -0.5];
        let g1 = pf.gradient(&x, 0.6);
        let g2 = pf2.gradient(&x, 0.6);
        for k in 0..2 {
            assert!((g2[k] - 2.0 * g1[k]).abs() < 1e-12);
            let h = 1e-5;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (pf.value(&xp, 0.6) - pf.value(&xm, 0.6)) / (2.0 * h);
            assert!((fd - g1[k]).abs() <= 1e-6 * (1.0 + g1[k].abs()));
        }
        let batch = pf.gradient_batch(array![[0.2, -0.5]].view(), 0.6);
        assert!((batch[[0, 0]] - g1[0]).abs() < 1e-12 && (batch[[0, 1]] - g1[1]).abs() < 1e-12);
    }

    #[test]
    fn drift_uses_conjugate_gradient() {
        let f = fm(2, 12, 4);
        let theta = Array1::from_shape_fn(f.len(), |j| 0.3 * j as f64 - 1.0);
        let pf = PotentialField::new(f.clone(), theta).unwrap();
        let x = [0.1, 0.9];
        let g = pf.gradient(&x, 0.2);
        assert_eq!(drift_from_potential(&CostFunction::Quadratic, &pf, &x, 0.2), g);
        let p4 = CostFunction::power(4.0).unwrap();
        let q = 4.0 / 3.0;
        let r = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let want: Vec<f64> = g.iter().map(|v| r.powf(q - 2.0) * v).collect();
        let got = drift_from_potential(&p4, &pf, &x, 0.2);
        for k in 0..2 {
            assert!((got[k] - want[k]).abs() < 1e-12);
        }
        let zero = PotentialField::zeros(f);
        assert_eq!(drift_from_potential(&p4, &zero, &x, 0.2), vec![0.0, 0.0]);
    }

    #[test]
    fn free_field_linearity_and_single_feature() {
        let f = fm(2, 6, 8).with_affine(true);
        assert_eq!(FreeVectorField::zeros(f.clone()).eval(&[1.0, 2.0], 0.5), vec![0.0, 0.0]);
        let a = Array2::from_shape_fn((f.len(), 2), |(i, j)| (i + 2 * j) as f64 * 0.1);
        let b = Array2::from_shape_fn((f.len(), 2), |(i, j)| ((i * j) as f64).cos());
        let fa = FreeVectorField::new(f.clone(), a.clone()).unwrap();
        let fb = FreeVectorField::new(f.clone(), b.clone()).unwrap();
        let fab = FreeVectorField::new(f, &a + &b).unwrap();
        let x = [0.7, -0.2];
        let (va, vb, vab) = (fa.eval(&x, 0.3), fb.eval(&x, 0.3), fab.eval(&x, 0.3));
        for k in 0..2 {
            assert!((vab[k] - va[k] - vb[k]).abs() < 1e-12);
        }
        let batch = fab.velocity_batch(array![[0.7, -0.2]].view(), 0.3);
        assert!((batch[[0, 0]] - vab[0]).abs() < 1e-12);

        let one = fm(1, 1, 3);
        let field = FreeVectorField::new(one.clone(), array![[2.5]]).unwrap();
        let x = [0.4];
        let arg = one.omega[[0, 0]] * 0.4 + one.omega_t[0] * 0.1 + one.phase[0];
        let want = 2.5 * 2f64.sqrt() * arg.cos();
        assert!((field.eval(&x, 0.1)[0] - want).abs() < 1e-12);
    }

    #[test]
    fn text_format_round_trips() {
        let f = fm(2, 5, 12).with_affine(true);
        let theta = Array1::from_shape_fn(f.len(), |j| j as f64 / 3.0);
        let pf = PotentialField::new(f.clone(), theta).unwrap();
        let text = pf.to_text();
        assert!(text.starts_with("riftort-field v1 kind=potential d=2 M=5"));
        assert_eq!(StoredField::parse(&text).unwrap(), StoredField::Potential(pf));

        let th = Array2::from_shape_fn((f.len(), 2), |(i, j)| (i as f64) - 0.25 * j as f64);
        let fv = FreeVectorField::new(f, th).unwrap();
        let text = fv.to_text();
        assert!(text.starts_with("riftort-field v1 kind=free d=2 M=5"));
        assert_eq!(StoredField::parse(&text).unwrap(), StoredField::Free(fv));

        assert!(StoredField::parse("nonsense").is_err());
        let truncated: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(StoredField::parse(&truncated).is_err());
    }

    #[test]
    fn median_heuristic() {
        let pts = array![[0.0], [1.0], [3.0]];
        // distances 1, 3, 2
        assert_eq!(median_pairwise_distance(pts.view(), 100), 2.0);
    }
}
