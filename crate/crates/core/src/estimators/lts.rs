//! Least trimmed squares by concentration steps, its L1-penalised (sparse)
//! variant, and minimum-norm interpolation on the selected clean subset.

use std::collections::HashSet;

use itertools::Itertools;

use super::lasso::lasso_cd_warm;
use super::FitResult;
use crate::error::{invalid, Error, Result};
use crate::numkit::{dot, mean, min_norm_lstsq, norm1, Matrix, RngStream};

/// Stream id for the random starts; the seed comes from [`LtsConfig::seed`].
const START_STREAM: u64 = 0x51_75;

/// Every start subset is tried, instead of `n_starts` random ones, when
/// there are at most this many.
pub const ENUMERATION_LIMIT: usize = 500;

/// Whether `C(n, k) <= limit` for `k <= n`, without overflow.
fn subset_count_at_most(n: usize, k: usize, limit: usize) -> bool {
    let mut c: u128 = 1;
    // each partial product is itself a binomial coefficient, so the division is exact
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > limit as u128 {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtsConfig {
    /// Subset fraction, `h = ⌊alpha n⌋`.
    pub alpha: f64,
    pub n_starts: usize,
    /// Rows drawn per random start. The start fit on these rows is expanded
    /// to the `h` rows with the smallest residuals; values `>= h` draw
    /// `h`-subsets that are used as they are.
    pub start_size: usize,
    pub n_keep: usize,
    pub initial_csteps: usize,
    /// Cap on C-steps while refining each kept candidate.
    pub max_csteps: usize,
    /// `lambda = lambda_frac * lambda_max(subset)`; zero gives plain LTS.
    pub lambda_frac: f64,
    pub lasso_tol: f64,
    pub lasso_max_pass: usize,
    /// Seed of the random start subsets.
    pub seed: u64,
}

impl Default for LtsConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            n_starts: 20,
            start_size: 3,
            n_keep: 5,
            initial_csteps: 2,
            max_csteps: 50,
            lambda_frac: 0.05,
            lasso_tol: 1e-7,
            lasso_max_pass: 1000,
            seed: 0,
        }
    }
}

impl LtsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("must lie in [0.5, 1], got {}", self.alpha)));
        }
        if self.n_starts < 1 {
            return Err(invalid("n_starts", "must be at least 1"));
        }
        if self.start_size < 1 {
            return Err(invalid("start_size", "must be at least 1"));
        }
        if self.n_keep < 1 || self.n_keep > self.n_starts {
            return Err(invalid("n_keep", "must lie in [1, n_starts]"));
        }
        if self.initial_csteps < 1 {
            return Err(invalid("initial_csteps", "must be at least 1"));
        }
        if self.max_csteps < 1 {
            return Err(invalid("max_csteps", "must be at least 1"));
        }
        if !(self.lambda_frac >= 0.0 && self.lambda_frac.is_finite()) {
            return Err(invalid("lambda_frac", "must be non-negative"));
        }
        if !(self.lasso_tol > 0.0) || self.lasso_max_pass < 1 {
            return Err(invalid("lasso_tol", "lasso tolerance and pass cap must be positive"));
        }
        Ok(())
    }

    /// Clean-subset size for `n` observations.
    pub fn h(&self, n: usize) -> Result<usize> {
        let h = (self.alpha * n as f64 + 1e-9).floor() as usize;
        if h < 2 || h > n {
            return Err(invalid("alpha", format!("subset size {h} invalid for n = {n}")));
        }
        Ok(h)
    }
}

/// `Σ_{i∈subset} (y_i − X_i β)²`
pub fn trimmed_sum_of_squares(x: &Matrix, y: &[f64], beta: &[f64], subset: &[usize]) -> f64 {
    subset
        .iter()
        .map(|&i| {
            let r = y[i] - dot(x.row(i), beta);
            r * r
        })
        .sum()
}

/// Indices of the `h` smallest squared residuals, ties to the lower row
/// index, returned in ascending order.
fn smallest_residuals(x: &Matrix, y: &[f64], beta: &[f64], h: usize) -> Vec<usize> {
    let sq: Vec<f64> = (0..x.rows())
        .map(|i| {
            let r = y[i] - dot(x.row(i), beta);
            r * r
        })
        .collect();
    let mut order: Vec<usize> = (0..x.rows()).collect();
    order.sort_by(|&a, &b| sq[a].total_cmp(&sq[b]).then(a.cmp(&b)));
    order.truncate(h);
    order.sort_unstable();
    order
}

#[derive(Debug, Clone, PartialEq)]
pub struct CStep {
    pub subset: Vec<usize>,
    pub beta: Vec<f64>,
    /// Trimmed sum of squares of `beta` over the new subset.
    pub objective: f64,
}

/// One concentration step: fit on `subset`, then keep the `|subset|` rows
/// with the smallest squared residuals over all rows.
pub fn cstep<F>(x: &Matrix, y: &[f64], subset: &[usize], mut fit: F) -> Result<CStep>
where
    F: FnMut(&Matrix, &[f64]) -> Result<Vec<f64>>,
{
    let h = subset.len();
    if h == 0 || h > x.rows() {
        return Err(invalid("subset", format!("size {h} for {} rows", x.rows())));
    }
    let xs = x.select_rows(subset);
    let ys: Vec<f64> = subset.iter().map(|&i| y[i]).collect();
    let beta = fit(&xs, &ys)?;
    let new_subset = smallest_residuals(x, y, &beta, h);
    let objective = trimmed_sum_of_squares(x, y, &beta, &new_subset);
    Ok(CStep {
        subset: new_subset,
        beta,
        objective,
    })
}

/// Penalty level for one subset: `lambda_frac * max_j |Σ_i x_ij (y_i − ȳ)| / h`.
pub fn slts_lambda(xs: &Matrix, ys: &[f64], lambda_frac: f64) -> f64 {
    if lambda_frac == 0.0 {
        return 0.0;
    }
    let h = xs.rows() as f64;
    let ybar = mean(ys);
    let centred: Vec<f64> = ys.iter().map(|v| v - ybar).collect();
    let corr = xs.tmatvec(&centred).expect("subset shapes agree");
    lambda_frac * corr.iter().fold(0.0f64, |a, c| a.max(c.abs())) / h
}

/// Fit on the rows of a small start subset, with that subset's penalty.
fn start_fit(x: &Matrix, y: &[f64], rows: &[usize], cfg: &LtsConfig) -> Result<Vec<f64>> {
    let xs = x.select_rows(rows);
    let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    if cfg.lambda_frac == 0.0 {
        return min_norm_lstsq(&xs, &ys);
    }
    let lambda = slts_lambda(&xs, &ys, cfg.lambda_frac);
    lasso_cd_warm(&xs, &ys, lambda, cfg.lasso_tol, cfg.lasso_max_pass, None).map(|f| f.beta)
}

struct Candidate {
    subset: Vec<usize>,
    beta: Vec<f64>,
    lambda: f64,
    objective: f64,
    csteps: usize,
    fixed: bool,
}

impl Candidate {
    fn advance(&mut self, x: &Matrix, y: &[f64], cfg: &LtsConfig, steps: usize) -> Result<()> {
        let h = self.subset.len() as f64;
        for _ in 0..steps {
            let mut lambda = 0.0;
            let warm = &self.beta;
            let step = cstep(x, y, &self.subset, |xs, ys| {
                if cfg.lambda_frac == 0.0 {
                    return min_norm_lstsq(xs, ys);
                }
                lambda = slts_lambda(xs, ys, cfg.lambda_frac);
                let warm = (warm.len() == xs.cols()).then_some(warm.as_slice());
                lasso_cd_warm(xs, ys, lambda, cfg.lasso_tol, cfg.lasso_max_pass, warm).map(|f| f.beta)
            })?;
            self.fixed = step.subset == self.subset;
            self.objective = step.objective / h + lambda * norm1(&step.beta);
            self.subset = step.subset;
            self.beta = step.beta;
            self.lambda = lambda;
            self.csteps += 1;
            if self.fixed {
                break;
            }
        }
        Ok(())
    }
}

/// Sparse least trimmed squares:
/// `min_{|H| = h} Σ_{i∈H} (y_i − X_i β)² / h + lambda ‖β‖₁`.
///
/// Each random start (see [`LtsConfig::start_size`]) is concentrated with a
/// few C-steps, the best
/// `n_keep` are refined to a fixed point (or `max_csteps`) and the lowest
/// objective wins.
pub fn fit_slts(x: &Matrix, y: &[f64], cfg: &LtsConfig) -> Result<FitResult> {
    cfg.validate()?;
    let n = x.rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} rows but {} responses", y.len())));
    }
    if n < 4 {
        return Err(invalid("n", format!("sparse LTS needs at least 4 rows, got {n}")));
    }
    let h = cfg.h(n)?;
    let mut rng = RngStream::new(cfg.seed, START_STREAM);

    let mut last_err = None;
    let mut candidates = Vec::with_capacity(cfg.n_starts);
    let k = cfg.start_size.min(h);
    let starts: Vec<Vec<usize>> = if k < h && subset_count_at_most(n, k, ENUMERATION_LIMIT) {
        (0..n).combinations(k).collect()
    } else {
        (0..cfg.n_starts)
            .map(|_| rng.indices_without_replacement(k, n))
            .collect::<Result<_>>()?
    };
    let n_tried = starts.len();
    for drawn in starts {
        let subset = if k == h {
            drawn
        } else {
            match start_fit(x, y, &drawn, cfg) {
                Ok(beta) => smallest_residuals(x, y, &beta, h),
                Err(e) => {
                    last_err = Some(e);
                    continue;
                }
            }
        };
        let mut cand = Candidate {
            subset,
            beta: Vec::new(),
            lambda: 0.0,
            objective: f64::INFINITY,
            csteps: 0,
            fixed: false,
        };
        match cand.advance(x, y, cfg, cfg.initial_csteps) {
            Ok(()) => candidates.push(cand),
            Err(e) => last_err = Some(e),
        }
    }
    if candidates.is_empty() {
        return Err(Error::EstimationFailed(format!(
            "all {} starts failed: {}",
            n_tried,
            last_err.map_or_else(String::new, |e| e.to_string())
        )));
    }
    // stable sort: equal objectives keep start order
    candidates.sort_by(|a, b| a.objective.total_cmp(&b.objective));
    let mut seen = HashSet::new();
    candidates.retain(|c| seen.insert(c.subset.clone()));
    candidates.truncate(cfg.n_keep);

    let mut best: Option<Candidate> = None;
    for mut cand in candidates {
        if !cand.fixed {
            let before = cand.csteps;
            let budget = cfg.max_csteps;
            if let Err(e) = cand.advance(x, y, cfg, budget) {
                last_err = Some(e);
                continue;
            }
            debug_assert!(cand.csteps - before <= budget);
        }
        if best.as_ref().is_none_or(|b| cand.objective < b.objective) {
            best = Some(cand);
        }
    }
    let best = best.ok_or_else(|| {
        Error::EstimationFailed(format!(
            "refinement failed: {}",
            last_err.map_or_else(String::new, |e| e.to_string())
        ))
    })?;
    Ok(FitResult {
        beta_hat: best.beta,
        iterations: best.csteps,
        converged: best.fixed,
        clean_subset: Some(best.subset),
        objective: best.objective,
    })
}

/// Minimum-norm interpolation restricted to the clean subset found by
/// [`fit_slts`].
pub fn fit_subset_interpolator(x: &Matrix, y: &[f64], cfg: &LtsConfig) -> Result<FitResult> {
    let slts = fit_slts(x, y, cfg)?;
    let subset = slts.clean_subset.expect("sparse LTS always reports its subset");
    let xs = x.select_rows(&subset);
    let ys: Vec<f64> = subset.iter().map(|&i| y[i]).collect();
    let beta_hat = min_norm_lstsq(&xs, &ys)?;
    let objective = trimmed_sum_of_squares(x, y, &beta_hat, &subset) / subset.len() as f64;
    Ok(FitResult {
        beta_hat,
        iterations: slts.iterations,
        converged: slts.converged,
        clean_subset: Some(subset),
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::norm_inf;

    fn ls(xs: &Matrix, ys: &[f64]) -> Result<Vec<f64>> {
        min_norm_lstsq(xs, ys)
    }

    /// n=8, p=1: seven points on a line through the origin plus one gross outlier.
    fn tiny(seed: u64) -> (Matrix, Vec<f64>, usize) {
        let mut rng = RngStream::new(seed, 1);
        let xs: Vec<f64> = (0..8).map(|_| rng.uniform(0.5, 2.0)).collect();
        let mut y: Vec<f64> = xs.iter().map(|v| 1.5 * v + 0.05 * rng.normal()).collect();
        let bad = (rng.next_u64() % 8) as usize;
        y[bad] += 100.0;
        (Matrix::new(8, 1, xs).unwrap(), y, bad)
    }

    fn exhaustive(x: &Matrix, y: &[f64], h: usize) -> (Vec<usize>, f64) {
        let n = x.rows();
        let mut best = (Vec::new(), f64::INFINITY);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != h {
                continue;
            }
            let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let beta = ls(&x.select_rows(&subset), &subset.iter().map(|&i| y[i]).collect::<Vec<_>>()).unwrap();
            let obj = trimmed_sum_of_squares(x, y, &beta, &subset);
            if obj < best.1 {
                best = (subset, obj);
            }
        }
        best
    }

    #[test]
    fn optimal_subset_is_a_fixed_point() {
        let (x, y, _) = tiny(1);
        let (subset, _) = exhaustive(&x, &y, 5);
        let step = cstep(&x, &y, &subset, ls).unwrap();
        assert_eq!(step.subset, subset);
    }

    #[test]
    fn iterated_csteps_exclude_the_outlier() {
        for seed in 0..10 {
            let (x, y, bad) = tiny(seed);
            let mut subset: Vec<usize> = (0..5).collect();
            if !subset.contains(&bad) {
                subset[0] = bad;
                subset.sort_unstable();
            }
            let mut prev = f64::INFINITY;
            for _ in 0..20 {
                let step = cstep(&x, &y, &subset, ls).unwrap();
                assert!(step.objective <= prev * (1.0 + 1e-12) + 1e-12);
                prev = step.objective;
                let done = step.subset == subset;
                subset = step.subset;
                if done {
                    break;
                }
            }
            assert!(!subset.contains(&bad));
        }
    }

    #[test]
    fn ties_broken_by_lowest_index() {
        let x = Matrix::new(4, 1, vec![1.0; 4]).unwrap();
        let y = [1.0, 1.0, 1.0, 1.0];
        let step = cstep(&x, &y, &[2, 3], |_, _| Ok(vec![1.0])).unwrap();
        assert_eq!(step.subset, vec![0, 1]);
    }

    #[test]
    fn plain_lts_matches_exhaustive_search() {
        let cfg = LtsConfig {
            alpha: 5.0 / 8.0,
            lambda_frac: 0.0,
            ..LtsConfig::default()
        };
        for seed in 0..20 {
            let (x, y, _) = tiny(100 + seed);
            let fit = fit_slts(&x, &y, &LtsConfig { seed, ..cfg.clone() }).unwrap();
            let (subset, _) = exhaustive(&x, &y, 5);
            assert_eq!(fit.clean_subset.as_deref(), Some(subset.as_slice()));
            assert!(fit.converged);
        }
    }

    #[test]
    fn huge_penalty_gives_zero_fit() {
        let (x, y, _) = tiny(3);
        let cfg = LtsConfig {
            lambda_frac: 1e6,
            ..LtsConfig::default()
        };
        let fit = fit_slts(&x, &y, &cfg).unwrap();
        assert_eq!(norm_inf(&fit.beta_hat), 0.0);
        assert_eq!(fit.clean_subset.unwrap().len(), 4);
    }

    #[test]
    fn half_contaminated_responses_are_trimmed() {
        // n=20, p=1, ten responses shifted by 100 (about 100 noise sds)
        for seed in 0..10 {
            let mut rng = RngStream::new(seed, 2);
            let xs: Vec<f64> = rng.normals(20);
            let mut y: Vec<f64> = xs.iter().map(|v| 2.0 * v + rng.normal()).collect();
            let bad = rng.indices_without_replacement(10, 20).unwrap();
            for &i in &bad {
                y[i] += 100.0;
            }
            let x = Matrix::new(20, 1, xs).unwrap();
            let fit = fit_slts(&x, &y, &LtsConfig { seed, ..LtsConfig::default() }).unwrap();
            let subset = fit.clean_subset.unwrap();
            assert_eq!(subset.len(), 10);
            assert!(subset.iter().all(|i| !bad.contains(i)), "seed {seed}");
        }
    }

    #[test]
    fn subset_interpolator_fits_its_subset() {
        let mut rng = RngStream::new(9, 0);
        let (n, p) = (20, 30);
        let x = Matrix::new(n, p, rng.normals(n * p)).unwrap();
        let y = rng.normals(n);
        let fit = fit_subset_interpolator(&x, &y, &LtsConfig::default()).unwrap();
        let subset = fit.clean_subset.unwrap();
        assert_eq!(subset.len(), 10);
        for &i in &subset {
            assert!((y[i] - dot(x.row(i), &fit.beta_hat)).abs() < 1e-8);
        }
    }

    #[test]
    fn subset_counts() {
        assert!(subset_count_at_most(8, 3, 56));
        assert!(!subset_count_at_most(8, 3, 55));
        assert!(subset_count_at_most(10, 0, 1));
        assert!(!subset_count_at_most(200, 100, 500));
        assert!(subset_count_at_most(15, 3, ENUMERATION_LIMIT));
        assert!(!subset_count_at_most(50, 3, ENUMERATION_LIMIT));
    }

    #[test]
    fn h_subset_starts_still_trim_the_outlier() {
        for seed in 0..10 {
            let (x, y, bad) = tiny(200 + seed);
            let cfg = LtsConfig {
                start_size: 8,
                lambda_frac: 0.0,
                seed,
                ..LtsConfig::default()
            };
            let fit = fit_slts(&x, &y, &cfg).unwrap();
            assert!(!fit.clean_subset.unwrap().contains(&bad));
        }
    }

    #[test]
    fn config_validation() {
        assert!(LtsConfig { alpha: 0.4, ..LtsConfig::default() }.validate().is_err());
        assert!(LtsConfig { n_keep: 30, ..LtsConfig::default() }.validate().is_err());
        assert!(LtsConfig { start_size: 0, ..LtsConfig::default() }.validate().is_err());
        assert!(LtsConfig::default().h(3).is_err());
        assert_eq!(LtsConfig::default().h(50).unwrap(), 25);
        let x = Matrix::identity(3);
        assert!(fit_slts(&x, &[1.0, 2.0, 3.0], &LtsConfig::default()).is_err());
    }
}
