use super::matrix::{dot, Matrix};
use super::svd::{svd, Svd};
use crate::error::{Error, Result};

/// Relative singular-value cutoff used by [`pinv`] and the least-squares solves.
pub const DEFAULT_TOL_FACTOR: f64 = 1e-12;

fn cutoff(d: &Svd, rows: usize, cols: usize, tol_factor: f64) -> f64 {
    let smax = d.s.first().copied().unwrap_or(0.0);
    tol_factor * smax * rows.max(cols) as f64
}

/// Moore–Penrose pseudo-inverse. Singular values at or below
/// `tol_factor * max(S) * max(rows, cols)` are treated as zero.
pub fn pinv(a: &Matrix, tol_factor: f64) -> Result<Matrix> {
    let (m, n) = a.shape();
    let d = svd(a)?;
    let cut = cutoff(&d, m, n, tol_factor);
    let k = d.rank(cut);
    let inv_s: Vec<f64> = d.s[..k].iter().map(|s| 1.0 / s).collect();
    Ok(Matrix::from_fn(n, m, |i, j| {
        (0..k).map(|l| d.v[(i, l)] * inv_s[l] * d.u[(j, l)]).sum()
    }))
}

/// Minimum ℓ₂-norm least-squares solution `X⁺y`.
pub fn min_norm_lstsq(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but {} responses",
            x.rows(),
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response vector"));
    }
    let (m, n) = x.shape();
    let d = svd(x)?;
    let cut = cutoff(&d, m, n, DEFAULT_TOL_FACTOR);
    let k = d.rank(cut);
    // β = V_k diag(1/s) U_kᵀ y
    let mut beta = vec![0.0; n];
    for l in 0..k {
        let ut_y: f64 = (0..m).map(|i| d.u[(i, l)] * y[i]).sum();
        let coef = ut_y / d.s[l];
        for (j, b) in beta.iter_mut().enumerate() {
            *b += coef * d.v[(j, l)];
        }
    }
    Ok(beta)
}

/// Weighted minimum-norm least squares `(W^{1/2}X)⁺ W^{1/2} y`.
///
/// Weights must be non-negative; they are normalised to sum to one.
pub fn weighted_min_norm_lstsq(x: &Matrix, y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != x.rows() || y.len() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows, {} responses, {} weights",
            x.rows(),
            y.len(),
            w.len()
        )));
    }
    if w.iter().any(|&wi| !wi.is_finite() || wi < 0.0) {
        return Err(Error::DegenerateWeights("weights must be finite and non-negative"));
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights("all weights are zero"));
    }
    let root_w: Vec<f64> = w.iter().map(|wi| (wi / total).sqrt()).collect();
    let mut xt = x.clone();
    xt.scale_rows(&root_w);
    let yt: Vec<f64> = y.iter().zip(&root_w).map(|(yi, r)| yi * r).collect();
    min_norm_lstsq(&xt, &yt)
}

/// Solves the symmetric positive definite system `A x = b` by Cholesky.
/// Returns `None` when `A` is not numerically positive definite.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = (b[i] - dot(&l.row(i)[..i], &z[..i])) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (z[i] - s) / l[(i, i)];
    }
    Some(x)
}
