use ddlab::datagen::{generate_dataset, ContaminationSpec, DataSpec};
use ddlab::estimators::{
    fit_gd_m_estimator, fit_gd_traced, fit_min_l2, fit_slts, fit_subset_interpolator, Estimator,
    LtsConfig, SolverConfig, StepRule,
};
use ddlab::losses::{objective, LossSpec, HUBER_DELTA};
use ddlab::numkit::{dot, Matrix, RngStream};
use itertools::Itertools;
use proptest::prelude::*;

fn test_mse(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    (0..x.rows())
        .map(|i| (y[i] - dot(x.row(i), beta)).powi(2))
        .sum::<f64>()
        / x.rows() as f64
}

/// Exhaustive LTS for a single regressor without intercept, via the
/// closed-form slope `Σxy / Σx²` per subset.
fn lts_1d_oracle(x: &[f64], y: &[f64], h: usize) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, 0.0, Vec::new());
    for subset in (0..x.len()).combinations(h) {
        let (sxx, sxy, syy) = subset.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &i| {
            (a + x[i] * x[i], b + x[i] * y[i], c + y[i] * y[i])
        });
        let ss = syy - sxy * sxy / sxx;
        if ss < best.0 {
            best = (ss, sxy / sxx, subset);
        }
    }
    (best.1, best.2)
}

#[test]
fn tukey_resists_one_gross_outlier() {
    for seed in 0..5 {
        let mut rng = RngStream::new(seed, 11);
        let xs = rng.normals(20);
        let beta = 2.0;
        let mut y: Vec<f64> = xs.iter().map(|v| beta * v + 0.5 * rng.normal()).collect();
        let bad = (0..20).max_by(|&a, &b| xs[a].abs().total_cmp(&xs[b].abs())).unwrap();
        y[bad] += 100.0;
        let x = Matrix::new(20, 1, xs.clone()).unwrap();

        // one outlier, so the oracle trims exactly one row
        let (lts, subset) = lts_1d_oracle(&xs, &y, 19);
        assert!(!subset.contains(&bad));
        let tukey = fit_gd_m_estimator(&x, &y, &LossSpec::tukey(), &SolverConfig::default()).unwrap();
        let ls = fit_min_l2(&x, &y).unwrap();
        let tukey_gap = (tukey.beta_hat[0] - lts).abs();
        assert!(tukey_gap < 0.1, "seed {seed}: {tukey_gap}");
        let tukey_err = (tukey.beta_hat[0] - beta).abs();
        let ls_err = (ls.beta_hat[0] - beta).abs();
        assert!(ls_err >= 5.0 * tukey_err, "seed {seed}: {ls_err} vs {tukey_err}");
    }
}

fn slts_vs_least_squares(seed: u64) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let data = generate_dataset(&mut RngStream::new(seed, 12), &DataSpec::default(), 10).unwrap();
    let cfg = LtsConfig {
        seed,
        ..LtsConfig::default()
    };
    let slts = fit_slts(&data.x_train, &data.y_train, &cfg).unwrap();
    let ls = fit_min_l2(&data.x_train, &data.y_train).unwrap();
    let a = test_mse(&data.x_test, &data.y_test, &slts.beta_hat);
    let b = test_mse(&data.x_test, &data.y_test, &ls.beta_hat);
    (data.beta_true, slts.beta_hat, a, b)
}

#[test]
fn slts_on_clean_data_competes_with_least_squares() {
    for seed in 0..20 {
        let (_, _, a, b) = slts_vs_least_squares(seed);
        assert!(a <= 3.0 * b, "seed {seed}: slts {a} vs ls {b}");
    }
}

#[test]
#[ignore = "lambda_frac = 0.05 zeroes small true coefficients; holds on about 1 seed in 7"]
fn slts_on_clean_data_keeps_the_true_support() {
    for seed in 0..20 {
        let (truth, est, _, _) = slts_vs_least_squares(seed);
        for (j, &b) in truth.iter().enumerate() {
            assert!(b == 0.0 || est[j] != 0.0, "seed {seed}: column {j}");
        }
    }
}

#[test]
fn slts_trims_half_contaminated_responses() {
    let spec = DataSpec {
        n_train: 20,
        contamination: ContaminationSpec::y_additive(0.5, 100.0),
        ..DataSpec::default()
    };
    for seed in 0..10 {
        let data = generate_dataset(&mut RngStream::new(seed, 13), &spec, 1).unwrap();
        assert_eq!(data.contaminated_rows.len(), 10);
        let fit = fit_slts(&data.x_train, &data.y_train, &LtsConfig { seed, ..LtsConfig::default() }).unwrap();
        let subset = fit.clean_subset.unwrap();
        assert_eq!(subset.len(), 10);
        assert!(subset.iter().all(|i| !data.contaminated_rows.contains(i)), "seed {seed}");
    }
}

#[test]
fn subset_interpolator_without_contamination_tracks_full_interpolation() {
    let spec = DataSpec::default();
    let (mut sub_total, mut full_total) = (0.0, 0.0);
    for seed in 0..5 {
        let data = generate_dataset(&mut RngStream::new(seed, 14), &spec, 1000).unwrap();
        let sub = fit_subset_interpolator(&data.x_train, &data.y_train, &LtsConfig { seed, ..LtsConfig::default() }).unwrap();
        let subset = sub.clean_subset.as_ref().unwrap();
        assert_eq!(subset.len(), 25);
        for &i in subset {
            assert!((data.y_train[i] - dot(data.x_train.row(i), &sub.beta_hat)).abs() < 1e-8);
        }
        let full = fit_min_l2(&data.x_train, &data.y_train).unwrap();
        let a = test_mse(&data.x_test, &data.y_test, &sub.beta_hat);
        let b = test_mse(&data.x_test, &data.y_test, &full.beta_hat);
        assert!(a <= 5.0 * b, "seed {seed}: {a} vs {b}");
        sub_total += a;
        full_total += b;
    }
    assert!(sub_total <= 5.0 * full_total);
}

#[test]
fn subset_interpolator_drops_separable_outliers() {
    let spec = DataSpec {
        n_train: 20,
        contamination: ContaminationSpec::y_additive(0.25, 100.0),
        ..DataSpec::default()
    };
    for seed in 0..10 {
        let data = generate_dataset(&mut RngStream::new(seed, 15), &spec, 2).unwrap();
        let fit = fit_subset_interpolator(&data.x_train, &data.y_train, &LtsConfig { seed, ..LtsConfig::default() }).unwrap();
        assert!(fit.clean_subset.unwrap().iter().all(|i| !data.contaminated_rows.contains(i)));
    }
}

#[test]
fn huber_reaches_the_interpolating_optimum_in_its_quadratic_region() {
    let mut rng = RngStream::new(16, 0);
    let (n, p) = (15, 60);
    let x = Matrix::new(n, p, rng.normals(n * p)).unwrap();
    let y: Vec<f64> = rng.normals(n).iter().map(|v| 0.3 * v).collect();
    let ls = fit_min_l2(&x, &y).unwrap();
    let ls_resid_max = (0..n).map(|i| (y[i] - dot(x.row(i), &ls.beta_hat)).abs()).fold(0.0, f64::max);
    assert!(ls_resid_max <= HUBER_DELTA);
    let cfg = SolverConfig {
        max_iter: 10_000,
        tol_inf: 1e-13,
        ..SolverConfig::default()
    };
    let gd = fit_gd_m_estimator(&x, &y, &LossSpec::huber(), &cfg).unwrap();
    let train = test_mse(&x, &y, &gd.beta_hat);
    assert!(train < (HUBER_DELTA / 10.0).powi(2));
    let gap = objective(&LossSpec::huber(), &x, &y, &gd.beta_hat)
        - objective(&LossSpec::huber(), &x, &y, &ls.beta_hat);
    assert!(gap.abs() < 1e-6, "{gap}");
}

#[test]
fn both_step_rules_decrease_the_objective() {
    let mut rng = RngStream::new(17, 0);
    let x = Matrix::new(30, 40, rng.normals(1200)).unwrap();
    let mut y = rng.normals(30);
    y[3] += 40.0;
    for rule in [StepRule::BarzilaiBorwein, StepRule::Doubling] {
        let cfg = SolverConfig {
            step_rule: rule,
            ..SolverConfig::default()
        };
        let (_, trace) = fit_gd_traced(&x, &y, &LossSpec::huber(), &cfg).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(trace.last().unwrap() < &trace[0]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn gd_iteration_accounting(seed in any::<u64>(), n in 3usize..25, p in 1usize..40, cap in 1usize..60, tukey in any::<bool>()) {
        let mut rng = RngStream::new(seed, 18);
        let x = Matrix::new(n, p, rng.normals(n * p)).unwrap();
        let y: Vec<f64> = rng.normals(n).iter().map(|v| 4.0 * v).collect();
        let loss = if tukey { LossSpec::tukey() } else { LossSpec::huber() };
        let cfg = SolverConfig { max_iter: cap, ..SolverConfig::default() };
        let (fit, trace) = fit_gd_traced(&x, &y, &loss, &cfg).unwrap();
        prop_assert!(fit.iterations <= cap);
        prop_assert!(fit.converged || fit.iterations == cap);
        prop_assert!(fit.iterations == cap || fit.converged);
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn every_estimator_returns_finite_coefficients(seed in any::<u64>(), n in 4usize..20, p in 1usize..30) {
        let mut rng = RngStream::new(seed, 19);
        let x = Matrix::new(n, p, rng.normals(n * p)).unwrap();
        let y = rng.normals(n);
        for id in Estimator::IDS {
            let fit = Estimator::from_id(id).unwrap().with_seed(seed).fit(&x, &y).unwrap();
            prop_assert_eq!(fit.beta_hat.len(), p);
            prop_assert!(fit.beta_hat.iter().all(|b| b.is_finite()), "{}", id);
            let subset_based = matches!(id, "slts" | "slts_interp");
            prop_assert_eq!(fit.clean_subset.is_some(), subset_based);
            if let Some(s) = &fit.clean_subset {
                prop_assert_eq!(s.len(), n / 2);
                prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
