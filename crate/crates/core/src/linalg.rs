//! Least squares and pseudo-inverse helpers built on SVD / symmetric eigen.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: DVector<f64>,
    /// `(X'X)^-1`, assembled from the SVD factors.
    pub xtx_inv: DMatrix<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
}

fn numerical_rank(x: &DMatrix<f64>) -> usize {
    if x.ncols() == 0 {
        return 0;
    }
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOLERANCE * max).count()
}

/// Index of the first column that does not raise the rank of the columns
/// before it.
fn first_dependent_column(x: &DMatrix<f64>) -> usize {
    for j in 0..x.ncols() {
        if numerical_rank(&x.columns(0, j + 1).into_owned()) < j + 1 {
            return j;
        }
    }
    x.ncols().saturating_sub(1)
}

/// Ordinary least squares via the thin SVD of `x`.
///
/// `names` labels the columns so a rank failure can say which one is at fault.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LeastSquares> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(Error::Domain(format!(
            "regressand has {} rows, design has {n}",
            y.len()
        )));
    }
    if n <= k {
        return Err(Error::Length {
            required: k + 1,
            actual: n,
        });
    }
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || sv.iter().any(|s| *s <= RANK_TOLERANCE * max) {
        let j = first_dependent_column(x);
        return Err(Error::Singular {
            column: names.get(j).cloned().unwrap_or_else(|| format!("#{j}")),
        });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let uty = u.transpose() * y;
    let scaled = DVector::from_iterator(k, uty.iter().zip(sv.iter()).map(|(a, s)| a / s));
    let beta = v_t.transpose() * scaled;

    let mut v_scaled = v_t.transpose();
    for (mut col, s) in v_scaled.column_iter_mut().zip(sv.iter()) {
        col /= *s;
    }
    let xtx_inv = &v_scaled * v_scaled.transpose();

    let residuals = y - x * &beta;
    let rss = residuals.norm_squared();
    Ok(LeastSquares {
        beta,
        xtx_inv,
        residuals,
        rss,
    })
}

/// `(X'X)^-1` alone, with the same rank check as [`least_squares`].
pub fn xtx_inverse(x: &DMatrix<f64>, names: &[String]) -> Result<DMatrix<f64>> {
    let y = DVector::zeros(x.nrows());
    least_squares(x, &y, names).map(|ls| ls.xtx_inv)
}

/// `bread * X' diag(e^2) X * bread`.
pub fn sandwich(x: &DMatrix<f64>, residuals: &DVector<f64>, bread: &DMatrix<f64>) -> DMatrix<f64> {
    let k = x.ncols();
    let mut meat = DMatrix::<f64>::zeros(k, k);
    for (row, e) in x.row_iter().zip(residuals.iter()) {
        let w = e * e;
        if w == 0.0 {
            continue;
        }
        for a in 0..k {
            let xa = row[a] * w;
            for b in a..k {
                meat[(a, b)] += xa * row[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            meat[(a, b)] = meat[(b, a)];
        }
    }
    let out = bread * meat * bread;
    symmetrize(&out)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix and its numerical rank.
///
/// Eigenvalues with magnitude at most `RANK_TOLERANCE` times the largest
/// magnitude are treated as zero.
pub fn pinv_symmetric(a: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = a.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let max = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut inv = DMatrix::zeros(n, n);
    let mut rank = 0;
    if max == 0.0 {
        return (inv, 0);
    }
    for (i, lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > RANK_TOLERANCE * max {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            inv += (v * v.transpose()) / *lambda;
        }
    }
    (inv, rank)
}
