//! Benchmark distributions, empirical couplings and the linear interpolation
//! process between paired samples.
//!
//! All randomness comes from seeded ChaCha8 streams, so samples are identical
//! across platforms for a fixed `(spec, n, seed)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, RiftError};

/// Seeded generator used everywhere in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a run seed, a purpose label and an index.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    // FNV-1a over the label, then mixed with the base and index.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(splitmix64(base ^ h).wrapping_add(index))
}

/// A source or target law.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covs: Vec<Vec<Vec<f64>>>,
    },
    /// Equal-weight law on the two points `a` and `b`.
    TwoPoint {
        a: Vec<f64>,
        b: Vec<f64>,
    },
}

impl DistributionSpec {
    pub fn gaussian(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let s = DistributionSpec::Gaussian { mean, cov };
        s.validate()?;
        Ok(s)
    }

    pub fn standard_normal(dim: usize) -> Self {
        DistributionSpec::Gaussian {
            mean: vec![0.0; dim],
            cov: identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Gaussian { mean, .. } => mean.len(),
            DistributionSpec::UniformBox { lo, .. } => lo.len(),
            DistributionSpec::GaussianMixture { means, .. } => {
                means.first().map_or(0, |m| m.len())
            }
            DistributionSpec::TwoPoint { a, .. } => a.len(),
        }
    }

    /// Mean and covariance when the law is a single Gaussian.
    pub fn gaussian_params(&self) -> Option<(&[f64], &[Vec<f64>])> {
        match self {
            DistributionSpec::Gaussian { mean, cov } => Some((mean, cov)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(RiftError::Construction("dimension must be positive".into()));
        }
        match self {
            DistributionSpec::Gaussian { mean, cov } => {
                check_finite_vec(mean)?;
                gaussian_factor(cov, d).map(|_| ())
            }
            DistributionSpec::UniformBox { lo, hi } => {
                check_finite_vec(lo)?;
                check_finite_vec(hi)?;
                if hi.len() != d {
                    return Err(RiftError::Construction("lo/hi length mismatch".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(RiftError::Construction("uniform box needs lo <= hi".into()));
                }
                Ok(())
            }
            DistributionSpec::GaussianMixture {
                weights,
                means,
                covs,
            } => {
                if weights.is_empty() || weights.len() != means.len() || means.len() != covs.len()
                {
                    return Err(RiftError::Construction(
                        "mixture needs equally many weights, means and covariances".into(),
                    ));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(RiftError::Construction("mixture weights must be >= 0".into()));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(RiftError::Construction(format!(
                        "mixture weights sum to {total}, expected 1"
                    )));
                }
                for (m, c) in means.iter().zip(covs) {
                    if m.len() != d {
                        return Err(RiftError::Construction("mixture mean dimension".into()));
                    }
                    check_finite_vec(m)?;
                    gaussian_factor(c, d)?;
                }
                Ok(())
            }
            DistributionSpec::TwoPoint { a, b } => {
                check_finite_vec(a)?;
                check_finite_vec(b)?;
                if a.len() != b.len() {
                    return Err(RiftError::Construction("two-point dimension mismatch".into()));
                }
                Ok(())
            }
        }
    }
}

fn check_finite_vec(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(RiftError::Construction("non-finite parameter".into()))
    }
}

pub(crate) fn identity(d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub(crate) fn to_dmatrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let d = m.len();
    DMatrix::from_fn(d, d, |i, j| m[i][j])
}

/// Returns `L` with `L Lᵀ = cov`: Cholesky when possible, otherwise the
/// eigen factor `V Λ^{1/2}` for semidefinite matrices.
fn gaussian_factor(cov: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    if cov.len() != d || cov.iter().any(|r| r.len() != d) {
        return Err(RiftError::Construction(format!(
            "covariance must be {d}x{d}"
        )));
    }
    if cov.iter().flatten().any(|x| !x.is_finite()) {
        return Err(RiftError::Construction("non-finite covariance".into()));
    }
    let m = to_dmatrix(cov);
    let asym = (&m - m.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + m.abs().max()) {
        return Err(RiftError::Construction("covariance is not symmetric".into()));
    }
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.l());
    }
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l < -1e-10) {
        return Err(RiftError::Construction(
            "covariance is not positive semidefinite".into(),
        ));
    }
    let sqrt_l = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&sqrt_l))
}

/// An `n × d` sample matrix with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub data: Array2<f64>,
    pub source: String,
    pub seed: u64,
}

impl SampleSet {
    pub fn from_data(data: Array2<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(RiftError::Construction("sample set must be nonempty".into()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(RiftError::Construction("sample set has non-finite entries".into()));
        }
        Ok(SampleSet {
            data,
            source: "data".into(),
            seed: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }
}

/// Draws `n` samples of `spec` from the stream seeded by `seed`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(RiftError::Construction("n must be at least 1".into()));
    }
    spec.validate()?;
    let d = spec.dim();
    let mut rng = rng_from_seed(seed);
    let mut data = Array2::<f64>::zeros((n, d));
    match spec {
        DistributionSpec::Gaussian { mean, cov } => {
            let l = gaussian_factor(cov, d)?;
            for mut row in data.rows_mut() {
                draw_gaussian(&mut rng, mean, &l, row.as_slice_mut().unwrap());
            }
        }
        DistributionSpec::UniformBox { lo, hi } => {
            for mut row in data.rows_mut() {
                for k in 0..d {
                    let u: f64 = rng.random();
                    row[k] = lo[k] + (hi[k] - lo[k]) * u;
                }
            }
        }
        DistributionSpec::GaussianMixture {
            weights,
            means,
            covs,
        } => {
            let factors = covs
                .iter()
                .map(|c| gaussian_factor(c, d))
                .collect::<Result<Vec<_>>>()?;
            for mut row in data.rows_mut() {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut comp = weights.len() - 1;
                for (j, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        comp = j;
                        break;
                    }
                }
                draw_gaussian(&mut rng, &means[comp], &factors[comp], row.as_slice_mut().unwrap());
            }
        }
        DistributionSpec::TwoPoint { a, b } => {
            for mut row in data.rows_mut() {
                let pick = if rng.random::<bool>() { b } else { a };
                row.as_slice_mut().unwrap().copy_from_slice(pick);
            }
        }
    }
    Ok(SampleSet {
        data,
        source: spec.to_string(),
        seed,
    })
}

fn draw_gaussian(rng: &mut ChaCha8Rng, mean: &[f64], l: &DMatrix<f64>, out: &mut [f64]) {
    let d = mean.len();
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    for i in 0..d {
        let mut v = mean[i];
        for j in 0..d {
            v += l[(i, j)] * z[j];
        }
        out[i] = v;
    }
}

/// Row-aligned paired samples; row `i` of `x0` is coupled with row `i` of `x1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedCoupling {
    pub x0: Array2<f64>,
    pub x1: Array2<f64>,
}

impl PairedCoupling {
    pub fn new(x0: Array2<f64>, x1: Array2<f64>) -> Result<Self> {
        if x0.dim() != x1.dim() {
            return Err(RiftError::SizeMismatch(format!(
                "coupling sides have shapes {:?} and {:?}",
                x0.dim(),
                x1.dim()
            )));
        }
        if x0.nrows() == 0 || x0.ncols() == 0 {
            return Err(RiftError::Construction("coupling must be nonempty".into()));
        }
        if x0.iter().chain(x1.iter()).any(|v| !v.is_finite()) {
            return Err(RiftError::Construction("coupling has non-finite entries".into()));
        }
        Ok(PairedCoupling { x0, x1 })
    }

    pub fn len(&self) -> usize {
        self.x0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x0.ncols()
    }

    /// Displacements `x1 - x0`.
    pub fn displacements(&self) -> Array2<f64> {
        &self.x1 - &self.x0
    }

    /// The same pairs with the two sides exchanged.
    pub fn swapped(&self) -> PairedCoupling {
        PairedCoupling {
            x0: self.x1.clone(),
            x1: self.x0.clone(),
        }
    }
}

/// Pairs `s0` with a seeded uniform random permutation of `s1`.
pub fn independent_coupling(s0: &SampleSet, s1: &SampleSet, seed: u64) -> Result<PairedCoupling> {
    if s0.data.dim() != s1.data.dim() {
        return Err(RiftError::SizeMismatch(format!(
            "sample sets have shapes {:?} and {:?}",
            s0.data.dim(),
            s1.data.dim()
        )));
    }
    let mut perm: Vec<usize> = (0..s1.len()).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let x1 = s1.data.select(Axis(0), &perm);
    PairedCoupling::new(s0.data.clone(), x1)
}

/// Couples each 2D row with its image under the rotation by `theta`.
pub fn rotation_coupling(s0: &SampleSet, theta: f64) -> Result<PairedCoupling> {
    if s0.dim() != 2 {
        return Err(RiftError::Construction(format!(
            "rotation coupling needs d = 2, got d = {}",
            s0.dim()
        )));
    }
    if !theta.is_finite() {
        return Err(RiftError::Construction("rotation angle must be finite".into()));
    }
    let r = theta.rem_euclid(std::f64::consts::TAU);
    let excluded = [0.0, std::f64::consts::PI, std::f64::consts::TAU];
    if excluded.iter().any(|e| (r - e).abs() < 1e-12) {
        return Err(RiftError::Construction(
            "rotation angle must not be 0 or pi (identity and reflecting cases)".into(),
        ));
    }
    let (s, c) = theta.sin_cos();
    let mut x1 = Array2::zeros(s0.data.dim());
    for (src, mut dst) in s0.data.rows().into_iter().zip(x1.rows_mut()) {
        dst[0] = c * src[0] - s * src[1];
        dst[1] = s * src[0] + c * src[1];
    }
    PairedCoupling::new(s0.data.clone(), x1)
}

/// Positions `t·x1 + (1−t)·x0` and constant velocities `x1 − x0`.
pub fn interpolate(cpl: &PairedCoupling, t: f64) -> Result<(Array2<f64>, Array2<f64>)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(RiftError::Domain(format!("t = {t} is outside [0, 1]")));
    }
    let pos = &cpl.x1 * t + &cpl.x0 * (1.0 - t);
    Ok((pos, cpl.displacements()))
}

/// Stratified midpoints `(k + ½) / T`.
pub fn time_grid(points: usize) -> Vec<f64> {
    let t = points.max(1) as f64;
    (0..points.max(1)).map(|k| (k as f64 + 0.5) / t).collect()
}

// ---------------------------------------------------------------------------
// Config-string syntax: `gaussian:mean=0,0;cov=I`, `uniform:lo=0;hi=1`,
// `twopoint:a=-1;b=1`, `mixture:weights=..;means=a|b;covs=I|diag(..)`.

fn parse_err(msg: impl Into<String>) -> RiftError {
    RiftError::Construction(msg.into())
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| parse_err(format!("cannot parse number {t:?}")))
        })
        .collect()
}

fn parse_cov(s: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    let s = s.trim();
    if s == "I" {
        return Ok(identity(d));
    }
    if let Some(inner) = s.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let v = parse_vec(inner)?;
        if v.len() != d {
            return Err(parse_err(format!("diag needs {d} entries")));
        }
        return Ok((0..d)
            .map(|i| (0..d).map(|j| if i == j { v[i] } else { 0.0 }).collect())
            .collect());
    }
    if let Some(inner) = s.strip_prefix("full(").and_then(|r| r.strip_suffix(')')) {
        let v = parse_vec(inner)?;
        if v.len() != d * d {
            return Err(parse_err(format!("full needs {} entries", d * d)));
        }
        return Ok(v.chunks(d).map(|r| r.to_vec()).collect());
    }
    let scale: f64 = s
        .parse()
        .map_err(|_| parse_err(format!("cannot parse covariance {s:?}")))?;
    Ok((0..d)
        .map(|i| (0..d).map(|j| if i == j { scale } else { 0.0 }).collect())
        .collect())
}

fn fields(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| parse_err(format!("expected key=value, got {p:?}")))
        })
        .collect()
}

fn take<'a>(kv: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(format!("missing field `{key}`")))
}

fn broadcast(a: Vec<f64>, d: usize) -> Vec<f64> {
    if a.len() == 1 && d > 1 {
        vec![a[0]; d]
    } else {
        a
    }
}

impl FromStr for DistributionSpec {
    type Err = RiftError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| parse_err(format!("distribution {s:?} lacks a `kind:` prefix")))?;
        let kv = fields(body)?;
        let spec = match kind.trim() {
            "gaussian" => {
                let mean = parse_vec(take(&kv, "mean")?)?;
                let cov = match kv.iter().find(|(k, _)| *k == "cov") {
                    Some((_, c)) => parse_cov(c, mean.len())?,
                    None => identity(mean.len()),
                };
                DistributionSpec::Gaussian { mean, cov }
            }
            "uniform" => {
                let lo = parse_vec(take(&kv, "lo")?)?;
                let hi = parse_vec(take(&kv, "hi")?)?;
                let d = lo.len().max(hi.len());
                DistributionSpec::UniformBox {
                    lo: broadcast(lo, d),
                    hi: broadcast(hi, d),
                }
            }
            "twopoint" => DistributionSpec::TwoPoint {
                a: parse_vec(take(&kv, "a")?)?,
                b: parse_vec(take(&kv, "b")?)?,
            },
            "mixture" => {
                let weights = parse_vec(take(&kv, "weights")?)?;
                let means = take(&kv, "means")?
                    .split('|')
                    .map(parse_vec)
                    .collect::<Result<Vec<_>>>()?;
                let d = means.first().map_or(0, |m| m.len());
                let covs = match kv.iter().find(|(k, _)| *k == "covs") {
                    Some((_, c)) => c
                        .split('|')
                        .map(|c| parse_cov(c, d))
                        .collect::<Result<Vec<_>>>()?,
                    None => vec![identity(d); means.len()],
                };
                DistributionSpec::GaussianMixture {
                    weights,
                    means,
                    covs,
                }
            }
            other => return Err(parse_err(format!("unknown distribution kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_cov(c: &[Vec<f64>]) -> String {
    format!("full({})", fmt_vec(&c.concat()))
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Gaussian { mean, cov } => {
                write!(f, "gaussian:mean={};cov={}", fmt_vec(mean), fmt_cov(cov))
            }
            DistributionSpec::UniformBox { lo, hi } => {
                write!(f, "uniform:lo={};hi={}", fmt_vec(lo), fmt_vec(hi))
            }
            DistributionSpec::TwoPoint { a, b } => {
                write!(f, "twopoint:a={};b={}", fmt_vec(a), fmt_vec(b))
            }
            DistributionSpec::GaussianMixture {
                weights,
                means,
                covs,
            } => write!(
                f,
                "mixture:weights={};means={};covs={}",
                fmt_vec(weights),
                means.iter().map(|m| fmt_vec(m)).collect::<Vec<_>>().join("|"),
                covs.iter().map(|c| fmt_cov(c)).collect::<Vec<_>>().join("|"),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_point_support() {
        let spec: DistributionSpec = "twopoint:a=-1;b=1".parse().unwrap();
        let s = sample(&spec, 4, 11).unwrap();
        assert!(s.data.iter().all(|&v| v == -1.0 || v == 1.0));
    }

    #[test]
    fn gaussian_mean_concentrates() {
        let s = sample(&DistributionSpec::standard_normal(2), 10_000, 3).unwrap();
        let m = s.data.mean_axis(Axis(0)).unwrap();
        assert!(m.iter().all(|v| v.abs() < 0.05), "{m:?}");
    }

    #[test]
    fn uniform_in_box() {
        let spec: DistributionSpec = "uniform:lo=0;hi=1".parse().unwrap();
        let s = sample(&spec, 1000, 5).unwrap();
        assert!(s.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DistributionSpec::standard_normal(3);
        assert_eq!(sample(&spec, 50, 9).unwrap(), sample(&spec, 50, 9).unwrap());
        assert_ne!(sample(&spec, 50, 9).unwrap().data, sample(&spec, 50, 10).unwrap().data);
    }

    #[test]
    fn non_psd_covariance_rejected() {
        let bad = DistributionSpec::Gaussian {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        };
        assert!(matches!(sample(&bad, 3, 0), Err(RiftError::Construction(_))));
    }

    #[test]
    fn semidefinite_covariance_uses_eigen_factor() {
        let spec = DistributionSpec::Gaussian {
            mean: vec![0.0, 0.0],
            cov: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        };
        let s = sample(&spec, 100, 1).unwrap();
        for r in s.data.rows() {
            assert!((r[0] - r[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn independent_coupling_permutes_only() {
        let single = SampleSet::from_data(array![[0.0]]).unwrap();
        let c = independent_coupling(&single, &single, 1).unwrap();
        assert_eq!(c.x0, array![[0.0]]);
        assert_eq!(c.x1, array![[0.0]]);

        let s0 = SampleSet::from_data(array![[1.0], [2.0]]).unwrap();
        let s1 = SampleSet::from_data(array![[10.0], [20.0]]).unwrap();
        let a = independent_coupling(&s0, &s1, 42).unwrap();
        let b = independent_coupling(&s0, &s1, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.x1 == array![[10.0], [20.0]] || a.x1 == array![[20.0], [10.0]]);

        let s2 = SampleSet::from_data(array![[1.0, 2.0]]).unwrap();
        assert!(matches!(
            independent_coupling(&s0, &s2, 0),
            Err(RiftError::SizeMismatch(_))
        ));
    }

    #[test]
    fn independent_gaussian_coupling_cost_is_one() {
        let spec = DistributionSpec::standard_normal(1);
        let s0 = sample(&spec, 10_000, 1).unwrap();
        let s1 = sample(&spec, 10_000, 2).unwrap();
        let c = independent_coupling(&s0, &s1, 3).unwrap();
        let cost = c.displacements().mapv(|v| 0.5 * v * v).mean().unwrap();
        assert!((cost - 1.0).abs() < 0.05, "{cost}");
    }

    #[test]
    fn rotation_coupling_examples() {
        let s0 = SampleSet::from_data(array![[1.0, 0.0]]).unwrap();
        let c = rotation_coupling(&s0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((c.x1[[0, 0]]).abs() < 1e-15 && (c.x1[[0, 1]] - 1.0).abs() < 1e-15);
        assert!(rotation_coupling(&s0, std::f64::consts::PI).is_err());
        assert!(rotation_coupling(&s0, 0.0).is_err());
        assert!(rotation_coupling(&s0, 2.0 * std::f64::consts::TAU).is_err());
        let s1d = SampleSet::from_data(array![[1.0]]).unwrap();
        assert!(rotation_coupling(&s1d, 1.0).is_err());

        let g = sample(&DistributionSpec::standard_normal(2), 10_000, 8).unwrap();
        let c = rotation_coupling(&g, std::f64::consts::FRAC_PI_2).unwrap();
        let cost = c
            .displacements()
            .rows()
            .into_iter()
            .map(|r| 0.5 * r.dot(&r))
            .sum::<f64>()
            / 10_000.0;
        assert!((cost - 2.0).abs() < 0.1, "{cost}");
    }

    #[test]
    fn interpolation_endpoints_and_midpoints() {
        let c = PairedCoupling::new(array![[0.0]], array![[2.0]]).unwrap();
        let (p, v) = interpolate(&c, 0.25).unwrap();
        assert_eq!(p, array![[0.5]]);
        assert_eq!(v, array![[2.0]]);
        assert_eq!(interpolate(&c, 0.0).unwrap().0, c.x0);
        assert_eq!(interpolate(&c, 1.0).unwrap().0, c.x1);
        assert!(interpolate(&c, 1.5).is_err());
        assert!(interpolate(&c, -0.1).is_err());
    }

    #[test]
    fn time_grid_midpoints() {
        assert_eq!(time_grid(1), vec![0.5]);
        assert_eq!(time_grid(2), vec![0.25, 0.75]);
        assert_eq!(time_grid(4), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "gaussian:mean=0,0;cov=I",
            "gaussian:mean=3,0;cov=diag(2,0.5)",
            "gaussian:mean=1;cov=2",
            "uniform:lo=0;hi=1",
            "twopoint:a=-1;b=1",
            "mixture:weights=0.5,0.5;means=-2|2;covs=I|0.5",
        ] {
            let spec: DistributionSpec = s.parse().unwrap();
            let again: DistributionSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, again, "{s}");
        }
        assert!("gaussian:cov=I".parse::<DistributionSpec>().is_err());
        assert!("mixture:weights=0.5,0.6;means=0|1".parse::<DistributionSpec>().is_err());
        assert!("beta:a=1".parse::<DistributionSpec>().is_err());
    }
}
