//! Loss functions for M-estimation and the averaged regression objective.

use crate::error::{invalid, Result};
use crate::numkit::{axpy, dot, Matrix};

pub const HUBER_DELTA: f64 = 1.345;
pub const TUKEY_K: f64 = 4.685;

/// A loss `rho` applied to raw residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    Squared,
    Huber { delta: f64 },
    Tukey { k: f64 },
}

impl LossSpec {
    pub fn huber() -> Self {
        LossSpec::Huber { delta: HUBER_DELTA }
    }

    pub fn tukey() -> Self {
        LossSpec::Tukey { k: TUKEY_K }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::Squared => Ok(()),
            LossSpec::Huber { delta } if !(delta > 0.0 && delta.is_finite()) => {
                Err(invalid("delta", format!("must be positive, got {delta}")))
            }
            LossSpec::Tukey { k } if !(k > 0.0 && k.is_finite()) => {
                Err(invalid("k", format!("must be positive, got {k}")))
            }
            _ => Ok(()),
        }
    }

    pub fn rho(&self, r: f64) -> f64 {
        match *self {
            LossSpec::Squared => r * r,
            LossSpec::Huber { delta } => {
                let a = r.abs();
                if a <= delta {
                    0.5 * r * r
                } else {
                    delta * a - 0.5 * delta * delta
                }
            }
            LossSpec::Tukey { k } => {
                if r.abs() <= k {
                    let u = 1.0 - (r / k).powi(2);
                    1.0 - u * u * u
                } else {
                    1.0
                }
            }
        }
    }

    /// Derivative of [`rho`](Self::rho).
    pub fn psi(&self, r: f64) -> f64 {
        match *self {
            LossSpec::Squared => 2.0 * r,
            LossSpec::Huber { delta } => {
                if r.abs() <= delta {
                    r
                } else {
                    delta * r.signum()
                }
            }
            LossSpec::Tukey { k } => {
                if r.abs() <= k {
                    let u = 1.0 - (r / k).powi(2);
                    6.0 * r / (k * k) * u * u
                } else {
                    0.0
                }
            }
        }
    }
}

/// Residuals `y - X beta`.
pub fn residuals(x: &Matrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    (0..x.rows()).map(|i| y[i] - dot(x.row(i), beta)).collect()
}

/// `(1/n) Σ rho(y_i - X_i beta)` only.
pub fn objective(spec: &LossSpec, x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    let n = x.rows() as f64;
    (0..x.rows())
        .map(|i| spec.rho(y[i] - dot(x.row(i), beta)))
        .sum::<f64>()
        / n
}

/// Objective `(1/n) Σ rho(r_i)` and gradient `-(1/n) Σ psi(r_i) X_iᵀ`.
pub fn objective_and_gradient(
    spec: &LossSpec,
    x: &Matrix,
    y: &[f64],
    beta: &[f64],
) -> (f64, Vec<f64>) {
    let n = x.rows() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        let row = x.row(i);
        let r = y[i] - dot(row, beta);
        value += spec.rho(r);
        let w = spec.psi(r);
        if w != 0.0 {
            axpy(-w / n, row, &mut grad);
        }
    }
    (value / n, grad)
}
