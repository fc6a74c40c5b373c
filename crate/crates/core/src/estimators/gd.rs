use super::FitResult;
use crate::error::{invalid, Error, Result};
use crate::losses::{objective, objective_and_gradient, LossSpec};
use crate::numkit::{min_norm_lstsq, Matrix};

/// Maximum number of step halvings per iteration.
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Zero,
    /// Start at `X⁺y`. Degenerates to minimum-norm interpolation when `p >= n`.
    MinNorm,
}

/// How the first trial step of each backtracking search is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Twice the previously accepted step.
    Doubling,
    /// Barzilai-Borwein step `sᵀs / sᵀ(g_t − g_{t−1})` from the last two iterates and
    /// gradients; falls back to doubling when the curvature estimate is not
    /// positive.
    BarzilaiBorwein,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Stop once `‖β_t − β_{t−1}‖∞` falls below this.
    pub tol_inf: f64,
    pub init: InitKind,
    /// Trial step of the first iteration; later ones come from `step_rule`.
    pub initial_step: f64,
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    pub step_rule: StepRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol_inf: 1e-4,
            init: InitKind::Zero,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            step_rule: StepRule::BarzilaiBorwein,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        if !(self.tol_inf > 0.0) {
            return Err(invalid("tol", format!("must be positive, got {}", self.tol_inf)));
        }
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(invalid("initial_step", "must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(invalid("shrink", "must lie in (0, 1)"));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(invalid("sufficient_decrease", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Gradient descent with backtracking line search on `(1/n) Σ rho(y_i − X_i β)`.
pub fn fit_gd_m_estimator(
    x: &Matrix,
    y: &[f64],
    loss: &LossSpec,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    fit_gd_traced(x, y, loss, cfg).map(|(fit, _)| fit)
}

/// As [`fit_gd_m_estimator`], also returning the objective after every
/// iteration (the first entry is the objective at the starting point).
pub fn fit_gd_traced(
    x: &Matrix,
    y: &[f64],
    loss: &LossSpec,
    cfg: &SolverConfig,
) -> Result<(FitResult, Vec<f64>)> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but {} responses",
            x.rows(),
            y.len()
        )));
    }
    loss.validate()?;
    cfg.validate()?;

    let mut beta = match cfg.init {
        InitKind::Zero => vec![0.0; x.cols()],
        InitKind::MinNorm => min_norm_lstsq(x, y)?,
    };
    let (mut value, mut grad) = objective_and_gradient(loss, x, y, &beta);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence { iteration: 0 });
    }
    let mut trace = vec![value];
    let mut step = cfg.initial_step;
    let mut iterations = 0;
    let mut converged = false;

    for t in 1..=cfg.max_iter {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2 == 0.0 {
            converged = true;
            break;
        }
        let mut eta = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand: Vec<f64> = beta.iter().zip(&grad).map(|(b, g)| b - eta * g).collect();
            let f = objective(loss, x, y, &cand);
            if f.is_finite() && f <= value - cfg.sufficient_decrease * eta * g2 {
                accepted = Some((cand, f));
                break;
            }
            eta *= cfg.shrink;
        }
        iterations = t;
        let Some((cand, f)) = accepted else {
            // no representable decrease left along the gradient
            converged = true;
            break;
        };
        let change = cand
            .iter()
            .zip(&beta)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let (v, g) = objective_and_gradient(loss, x, y, &cand);
        if !v.is_finite() || g.iter().any(|gi| !gi.is_finite()) {
            return Err(Error::Divergence { iteration: t });
        }
        step = 2.0 * eta;
        if cfg.step_rule == StepRule::BarzilaiBorwein {
            let (mut ss, mut sy) = (0.0, 0.0);
            for j in 0..beta.len() {
                let s = cand[j] - beta[j];
                ss += s * s;
                sy += s * (g[j] - grad[j]);
            }
            let bb = ss / sy;
            if sy > 0.0 && bb.is_finite() {
                step = bb;
            }
        }
        beta = cand;
        debug_assert!(v <= f + 1e-12 * f.abs().max(1.0));
        value = v;
        grad = g;
        trace.push(value);
        if change < cfg.tol_inf {
            converged = true;
            break;
        }
    }

    Ok((
        FitResult {
            beta_hat: beta,
            iterations,
            converged,
            clean_subset: None,
            objective: value,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_min_l2;
    use crate::losses::residuals;
    use crate::numkit::{norm_inf, RngStream};

    #[test]
    fn zero_response_converges_immediately() {
        let x = Matrix::new(5, 3, (0..15).map(|v| v as f64).collect()).unwrap();
        let fit = fit_gd_m_estimator(&x, &[0.0; 5], &LossSpec::huber(), &SolverConfig::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.iterations, 0);
        assert!(fit.beta_hat.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn objective_never_increases_and_cap_is_respected() {
        let mut rng = RngStream::new(4, 4);
        for (n, p) in [(30, 5), (20, 20), (15, 60)] {
            let x = Matrix::new(n, p, rng.normals(n * p)).unwrap();
            let mut y = rng.normals(n);
            y[0] += 50.0;
            for loss in [LossSpec::Squared, LossSpec::huber(), LossSpec::tukey()] {
                let cfg = SolverConfig {
                    max_iter: 25,
                    ..SolverConfig::default()
                };
                let (fit, trace) = fit_gd_traced(&x, &y, &loss, &cfg).unwrap();
                assert!(trace.windows(2).all(|w| w[1] <= w[0]), "{loss:?}");
                assert!(fit.iterations <= 25);
                if !fit.converged {
                    assert_eq!(fit.iterations, 25);
                }
                if fit.iterations < 25 {
                    assert!(fit.converged);
                }
            }
        }
    }

    #[test]
    fn converged_flag_false_only_when_cap_binds() {
        let mut rng = RngStream::new(5, 5);
        let x = Matrix::new(20, 20, rng.normals(400)).unwrap();
        let y = rng.normals(20);
        let cfg = SolverConfig {
            max_iter: 3,
            ..SolverConfig::default()
        };
        let fit = fit_gd_m_estimator(&x, &y, &LossSpec::huber(), &cfg).unwrap();
        assert_eq!(fit.iterations, 3);
        assert!(!fit.converged);
    }

    #[test]
    fn huber_in_quadratic_region_agrees_with_min_norm_predictions() {
        // small responses keep every residual inside |r| <= delta
        let mut rng = RngStream::new(6, 6);
        let (n, p) = (10, 40);
        let x = Matrix::new(n, p, rng.normals(n * p)).unwrap();
        let y: Vec<f64> = rng.normals(n).iter().map(|v| 0.2 * v).collect();
        assert!(norm_inf(&y) <= crate::losses::HUBER_DELTA);
        let cfg = SolverConfig {
            max_iter: 5000,
            tol_inf: 1e-12,
            ..SolverConfig::default()
        };
        let fit = fit_gd_m_estimator(&x, &y, &LossSpec::huber(), &cfg).unwrap();
        let r = residuals(&x, &y, &fit.beta_hat);
        let mse = r.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!(mse < 1e-6, "{mse}");
        let ls = fit_min_l2(&x, &y).unwrap();
        let pred_gd = x.matvec(&fit.beta_hat).unwrap();
        let pred_ls = x.matvec(&ls.beta_hat).unwrap();
        assert!(pred_gd.iter().zip(&pred_ls).all(|(a, b)| (a - b).abs() < 1e-3));
        // from zero, gradient steps stay in the row space: same coefficients as X⁺y
        let diff = fit.beta_hat.iter().zip(&ls.beta_hat).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-3, "{diff}");
    }

    #[test]
    fn min_norm_init_is_already_stationary_for_interpolation() {
        let mut rng = RngStream::new(7, 7);
        let x = Matrix::new(8, 30, rng.normals(240)).unwrap();
        let y = rng.normals(8);
        let cfg = SolverConfig {
            init: InitKind::MinNorm,
            ..SolverConfig::default()
        };
        let fit = fit_gd_m_estimator(&x, &y, &LossSpec::huber(), &cfg).unwrap();
        let ls = fit_min_l2(&x, &y).unwrap();
        assert!(fit.converged);
        assert!(fit.iterations <= 1);
        let diff = fit.beta_hat.iter().zip(&ls.beta_hat).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-6);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = Matrix::identity(3);
        assert!(fit_gd_m_estimator(&x, &[1.0], &LossSpec::huber(), &SolverConfig::default()).is_err());
    }
}
