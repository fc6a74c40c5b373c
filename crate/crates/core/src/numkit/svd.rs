//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! The decomposition is computed on the tall orientation of the input: the
//! columns of a `m x n` matrix with `m >= n` are rotated pairwise until they are
//! mutually orthogonal. For wide inputs the transpose is decomposed and the
//! factors are swapped. One-sided Jacobi gives small singular values to high
//! relative accuracy, which matters for rank decisions at `p = n`.

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(S) Vᵀ` with `k = min(rows, cols)` singular triplets.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k`, orthonormal columns.
    pub u: Matrix,
    /// Non-negative and non-increasing, length `k`.
    pub s: Vec<f64>,
    /// `cols x k`, orthonormal columns.
    pub v: Matrix,
}

impl Svd {
    pub fn rank(&self, cutoff: f64) -> usize {
        self.s.iter().take_while(|&&s| s > cutoff).count()
    }

    /// `U diag(S) Vᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let (m, k) = self.u.shape();
        let n = self.v.rows();
        Matrix::from_fn(m, n, |i, j| {
            (0..k)
                .map(|l| self.u[(i, l)] * self.s[l] * self.v[(j, l)])
                .sum()
        })
    }
}

pub fn svd(a: &Matrix) -> Result<Svd> {
    if a.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    let (m, n) = a.shape();
    if m >= n {
        // columns of `a` are rows of `aᵀ`
        let cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let (u, s, v) = jacobi(cols, m).map_err(|sweeps| Error::SvdNoConvergence {
            rows: m,
            cols: n,
            sweeps,
        })?;
        Ok(Svd { u, s, v })
    } else {
        let cols: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
        let (u, s, v) = jacobi(cols, n).map_err(|sweeps| Error::SvdNoConvergence {
            rows: m,
            cols: n,
            sweeps,
        })?;
        Ok(Svd { u: v, s, v: u })
    }
}

/// Orthogonalises `cols` (each of length `len >= cols.len()`).
/// Returns `(U, S, V)` with `U` of shape `len x k` and `V` of shape `k x k`.
fn jacobi(mut cols: Vec<Vec<f64>>, len: usize) -> std::result::Result<(Matrix, Vec<f64>, Matrix), usize> {
    let k = cols.len();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (len as f64).max(1.0);

    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let mut converged = k < 2;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(sweep);
        }
        sweep += 1;
        converged = true;
        for i in 0..k - 1 {
            for j in i + 1..k {
                let alpha = norms[i];
                let beta = norms[j];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[i], &cols[j]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(j);
                rotate(&mut left[i], &mut right[0], c, s);
                let (left, right) = v.split_at_mut(j);
                rotate(&mut left[i], &mut right[0], c, s);
                norms[i] = dot(&cols[i], &cols[i]);
                norms[j] = dot(&cols[j], &cols[j]);
            }
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    let sing: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&a, &b| sing[b].total_cmp(&sing[a]).then(a.cmp(&b)));

    let s: Vec<f64> = order.iter().map(|&j| sing[j]).collect();
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut missing = Vec::new();
    for (pos, &j) in order.iter().enumerate() {
        if s[pos] > 0.0 {
            u_cols.push(cols[j].iter().map(|x| x / s[pos]).collect());
        } else {
            u_cols.push(vec![0.0; len]);
            missing.push(pos);
        }
    }
    complete_basis(&mut u_cols, &missing, len);

    let u = Matrix::from_fn(len, k, |r, c| u_cols[c][r]);
    let vm = Matrix::from_fn(k, k, |r, c| v[order[c]][r]);
    Ok((u, s, vm))
}

#[inline]
fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Fills the columns listed in `missing` with unit vectors orthogonal to all others.
fn complete_basis(cols: &mut [Vec<f64>], missing: &[usize], len: usize) {
    let mut candidate = 0;
    for &pos in missing {
        while candidate < len {
            let mut e = vec![0.0; len];
            e[candidate] = 1.0;
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for (c, col) in cols.iter().enumerate() {
                    if c == pos || (missing.contains(&c) && col.iter().all(|&x| x == 0.0)) {
                        continue;
                    }
                    let proj = dot(col, &e);
                    for (ei, ci) in e.iter_mut().zip(col) {
                        *ei -= proj * ci;
                    }
                }
            }
            let nrm = dot(&e, &e).sqrt();
            if nrm > 0.5 {
                cols[pos] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}
