//! Fitting procedures. None of them fits an intercept.

mod gd;
mod lasso;
mod lts;

pub use gd::{fit_gd_m_estimator, fit_gd_traced, InitKind, SolverConfig, StepRule};
pub use lasso::{lambda_max, lasso_cd, lasso_cd_warm, LassoFit};
pub use lts::{
    cstep, fit_slts, fit_subset_interpolator, slts_lambda, trimmed_sum_of_squares, CStep,
    LtsConfig,
};

use crate::error::Result;
use crate::losses::LossSpec;
use crate::numkit::{min_norm_lstsq, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Ascending row indices of the selected clean subset (subset-based fits only).
    pub clean_subset: Option<Vec<usize>>,
    /// Final value of the criterion the estimator minimises.
    pub objective: f64,
}

/// Minimum ℓ₂-norm least squares, `X⁺y`.
pub fn fit_min_l2(x: &Matrix, y: &[f64]) -> Result<FitResult> {
    let beta_hat = min_norm_lstsq(x, y)?;
    let objective = crate::losses::objective(&LossSpec::Squared, x, y, &beta_hat);
    Ok(FitResult {
        beta_hat,
        iterations: 1,
        converged: true,
        clean_subset: None,
        objective,
    })
}

/// An estimator together with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimator {
    MinL2,
    GradientDescent { loss: LossSpec, solver: SolverConfig },
    Slts(LtsConfig),
    SubsetInterpolator(LtsConfig),
}

impl Estimator {
    pub fn huber() -> Self {
        Estimator::GradientDescent {
            loss: LossSpec::huber(),
            solver: SolverConfig::default(),
        }
    }

    pub fn tukey() -> Self {
        Estimator::GradientDescent {
            loss: LossSpec::tukey(),
            solver: SolverConfig::default(),
        }
    }

    /// Identifier used in configuration files and on the command line.
    pub fn id(&self) -> &'static str {
        match self {
            Estimator::MinL2 => "min_l2",
            Estimator::GradientDescent { loss, .. } => match loss {
                LossSpec::Squared => "ls_gd",
                LossSpec::Huber { .. } => "huber",
                LossSpec::Tukey { .. } => "tukey",
            },
            Estimator::Slts(_) => "slts",
            Estimator::SubsetInterpolator(_) => "slts_interp",
        }
    }

    /// Estimator with default settings for an identifier.
    pub fn from_id(id: &str) -> Option<Self> {
        Some(match id {
            "min_l2" => Estimator::MinL2,
            "ls_gd" => Estimator::GradientDescent {
                loss: LossSpec::Squared,
                solver: SolverConfig::default(),
            },
            "huber" => Estimator::huber(),
            "tukey" => Estimator::tukey(),
            "slts" => Estimator::Slts(LtsConfig::default()),
            "slts_interp" => Estimator::SubsetInterpolator(LtsConfig::default()),
            _ => return None,
        })
    }

    pub const IDS: [&'static str; 6] = ["min_l2", "ls_gd", "huber", "tukey", "slts", "slts_interp"];

    pub fn is_iterative(&self) -> bool {
        matches!(self, Estimator::GradientDescent { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Estimator::MinL2 => Ok(()),
            Estimator::GradientDescent { loss, solver } => {
                loss.validate()?;
                solver.validate()
            }
            Estimator::Slts(cfg) | Estimator::SubsetInterpolator(cfg) => cfg.validate(),
        }
    }

    /// Same estimator with its random-start seed replaced (no-op for
    /// deterministic estimators).
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            Estimator::Slts(cfg) => Estimator::Slts(LtsConfig { seed, ..cfg.clone() }),
            Estimator::SubsetInterpolator(cfg) => {
                Estimator::SubsetInterpolator(LtsConfig { seed, ..cfg.clone() })
            }
            other => other.clone(),
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[f64]) -> Result<FitResult> {
        match self {
            Estimator::MinL2 => fit_min_l2(x, y),
            Estimator::GradientDescent { loss, solver } => fit_gd_m_estimator(x, y, loss, solver),
            Estimator::Slts(cfg) => fit_slts(x, y, cfg),
            Estimator::SubsetInterpolator(cfg) => fit_subset_interpolator(x, y, cfg),
        }
    }
}
