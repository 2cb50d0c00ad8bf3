//! Small dense symmetric linear algebra: SPD factorization with an
//! eigenvalue-clipping fallback, and PSD matrix square roots.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};

use crate::error::{Result, RiftError};

const CLIP: f64 = 1e-12;

/// A factorization of a symmetric positive (semi)definite matrix.
#[derive(Debug, Clone)]
pub enum SpdFactor {
    /// Lower-triangular Cholesky factor, row-major.
    Cholesky(Array2<f64>),
    /// `V diag(λ) Vᵀ` with eigenvalues clipped from below.
    Eigen {
        vectors: Array2<f64>,
        values: Array1<f64>,
    },
}

fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[[i, i]].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let (li, lj) = (l.row(i), l.row(j));
            let li = li.as_slice().expect("standard layout");
            let lj = lj.as_slice().expect("standard layout");
            let s: f64 = li[..j].iter().zip(&lj[..j]).map(|(x, y)| x * y).sum();
            let v = a[[i, j]] - s;
            if i == j {
                if !(v > 1e-14 * scale) {
                    return None;
                }
                l[[i, i]] = v.sqrt();
            } else {
                l[[i, j]] = v / l[[j, j]];
            }
        }
    }
    Some(l)
}

impl SpdFactor {
    /// Factors `a`. With `allow_fallback`, a failed Cholesky falls back to an
    /// eigendecomposition with eigenvalues clipped at 1e-12; otherwise a
    /// numerically singular matrix is an error.
    pub fn new(a: &Array2<f64>, allow_fallback: bool) -> Result<SpdFactor> {
        if a.nrows() != a.ncols() {
            return Err(RiftError::SizeMismatch("matrix is not square".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(RiftError::Numeric("matrix has non-finite entries".into()));
        }
        if let Some(l) = cholesky(a) {
            return Ok(SpdFactor::Cholesky(l));
        }
        if !allow_fallback {
            return Err(RiftError::Numeric(
                "Gram matrix is singular; use ridge_lambda > 0".into(),
            ));
        }
        let n = a.nrows();
        let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[[i, j]] + a[[j, i]]));
        let eig = m.symmetric_eigen();
        let vectors = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
        let values = Array1::from_shape_fn(n, |i| eig.eigenvalues[i].max(CLIP));
        Ok(SpdFactor::Eigen { vectors, values })
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &Array2<f64>) -> Array2<f64> {
        match self {
            SpdFactor::Cholesky(l) => {
                let n = l.nrows();
                let mut x = b.clone();
                for col in 0..b.ncols() {
                    // forward: L y = b
                    for i in 0..n {
                        let mut s = x[[i, col]];
                        for k in 0..i {
                            s -= l[[i, k]] * x[[k, col]];
                        }
                        x[[i, col]] = s / l[[i, i]];
                    }
                    // backward: Lᵀ x = y
                    for i in (0..n).rev() {
                        let mut s = x[[i, col]];
                        for k in i + 1..n {
                            s -= l[[k, i]] * x[[k, col]];
                        }
                        x[[i, col]] = s / l[[i, i]];
                    }
                }
                x
            }
            SpdFactor::Eigen { vectors, values } => {
                let mut coef = vectors.t().dot(b);
                for (mut row, v) in coef.rows_mut().into_iter().zip(values) {
                    row /= *v;
                }
                vectors.dot(&coef)
            }
        }
    }

    pub fn solve_vec(&self, b: &Array1<f64>) -> Array1<f64> {
        let col = b.clone().insert_axis(ndarray::Axis(1));
        self.solve(&col).column(0).to_owned()
    }
}

/// Symmetric PSD square root via eigendecomposition, clipping negative
/// eigenvalues to 0.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_solve() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let f = SpdFactor::new(&a, false).unwrap();
        assert!(matches!(f, SpdFactor::Cholesky(_)));
        let x = f.solve_vec(&array![1.0, 2.0]);
        let r = a.dot(&x) - array![1.0, 2.0];
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn singular_without_fallback_is_error() {
        let a = array![[1.0, 0.0], [0.0, 0.0]];
        assert!(matches!(SpdFactor::new(&a, false), Err(RiftError::Numeric(_))));
        let f = SpdFactor::new(&a, true).unwrap();
        assert!(matches!(f, SpdFactor::Eigen { .. }));
        let x = f.solve_vec(&array![2.0, 0.0]);
        assert!((x[0] - 2.0).abs() < 1e-12 && x[1].abs() < 1e-12);
    }

    #[test]
    fn square_root() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let r = sqrtm_psd(&m);
        assert!((r[(0, 0)] - 2.0).abs() < 1e-12 && (r[(1, 1)] - 3.0).abs() < 1e-12);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let r = sqrtm_psd(&m);
        assert!((&r * &r - &m).abs().max() < 1e-12);
    }
}
