use crate::error::{invalid, Error, Result};
use crate::numkit::{dot, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: Vec<f64>,
    /// Coordinate sweeps performed (full and active-set sweeps).
    pub passes: usize,
    pub converged: bool,
}

/// Smallest `lambda` for which the zero vector solves the lasso problem of
/// [`lasso_cd`]: `max_j |X_jᵀ y| / m`.
pub fn lambda_max(x: &Matrix, y: &[f64]) -> f64 {
    let m = x.rows() as f64;
    x.tmatvec(y)
        .map(|g| g.iter().fold(0.0f64, |a, v| a.max(v.abs())) / m)
        .unwrap_or(0.0)
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent for `(1/(2m)) ‖y − Xβ‖² + lambda ‖β‖₁`, starting at zero.
pub fn lasso_cd(x: &Matrix, y: &[f64], lambda: f64, tol: f64, max_pass: usize) -> Result<LassoFit> {
    lasso_cd_warm(x, y, lambda, tol, max_pass, None)
}

/// [`lasso_cd`] from an optional warm start.
///
/// Alternates full sweeps with sweeps over the current non-zero coordinates;
/// stops when a full sweep moves no coordinate by `tol` or more.
pub fn lasso_cd_warm(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_pass: usize,
    warm: Option<&[f64]>,
) -> Result<LassoFit> {
    let (m, p) = x.shape();
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!("{m} rows but {} responses", y.len())));
    }
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", format!("must be non-negative, got {lambda}")));
    }
    let mf = m as f64;
    // column-major copy for contiguous column access
    let xt = x.transpose();
    let col_sq: Vec<f64> = (0..p).map(|j| dot(xt.row(j), xt.row(j)) / mf).collect();

    let mut beta = match warm {
        Some(b) if b.len() == p => b.to_vec(),
        _ => vec![0.0; p],
    };
    let mut resid: Vec<f64> = match warm {
        Some(b) if b.len() == p => (0..m).map(|i| y[i] - dot(x.row(i), &beta)).collect(),
        _ => y.to_vec(),
    };

    let update = |j: usize, beta: &mut [f64], resid: &mut [f64]| -> f64 {
        if col_sq[j] == 0.0 {
            beta[j] = 0.0;
            return 0.0;
        }
        let col = xt.row(j);
        let old = beta[j];
        let z = dot(col, resid) / mf + col_sq[j] * old;
        let new = soft_threshold(z, lambda) / col_sq[j];
        let delta = new - old;
        if delta != 0.0 {
            beta[j] = new;
            for (r, c) in resid.iter_mut().zip(col) {
                *r -= delta * c;
            }
        }
        delta.abs()
    };

    let mut passes = 0;
    while passes < max_pass {
        let mut max_change = 0.0f64;
        for j in 0..p {
            max_change = max_change.max(update(j, &mut beta, &mut resid));
        }
        passes += 1;
        if max_change < tol {
            return Ok(LassoFit {
                beta,
                passes,
                converged: true,
            });
        }
        let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
        while passes < max_pass {
            let mut change = 0.0f64;
            for &j in &active {
                change = change.max(update(j, &mut beta, &mut resid));
            }
            passes += 1;
            if change < tol {
                break;
            }
        }
    }
    Ok(LassoFit {
        beta,
        passes,
        converged: false,
    })
}
