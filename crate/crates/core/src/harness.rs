//! Scenario sweeps: seeded replications per model dimension, metric
//! computation, deterministic aggregation, and the breakdown probe.

use std::time::Instant;

use rayon::prelude::*;

use crate::datagen::{generate_dataset, BetaLaw, BetaSpec, DataSpec, Dataset};
use crate::error::{invalid, Error, Result};
use crate::estimators::{Estimator, FitResult};
use crate::numkit::{dot, norm1, norm2, norm_inf, sample_variance, sub, Matrix, RngStream};

/// Default model-dimension grid.
pub const DEFAULT_P_GRID: [usize; 24] = [
    5, 10, 20, 30, 40, 50, 60, 80, 100, 150, 200, 250, 300, 400, 500, 750, 1000, 1250, 1500, 1750,
    2000, 3000, 4000, 5000,
];

pub const DEFAULT_REPLICATIONS: usize = 500;
pub const DEFAULT_MASTER_SEED: u64 = 20_240_101;

/// One experiment cell family: data law, estimator, dimension grid and
/// replication count.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Scenarios sharing a group are drawn on the same chart.
    pub group: Option<String>,
    pub data: DataSpec,
    pub estimator: Estimator,
    pub p_grid: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
}

impl Scenario {
    pub fn new(name: impl Into<String>, data: DataSpec, estimator: Estimator) -> Self {
        Self {
            name: name.into(),
            group: None,
            data,
            estimator,
            p_grid: DEFAULT_P_GRID.to_vec(),
            replications: DEFAULT_REPLICATIONS,
            master_seed: DEFAULT_MASTER_SEED,
        }
    }

    pub fn group_name(&self) -> &str {
        self.group.as_deref().unwrap_or(&self.name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if self.p_grid.is_empty() {
            return Err(invalid("p_grid", "must not be empty"));
        }
        if self.p_grid[0] < 1 || self.p_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("p_grid", "must be strictly ascending positive counts"));
        }
        if self.replications < 1 {
            return Err(invalid("replications", "must be at least 1"));
        }
        self.data.validate()?;
        self.estimator.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub scenario: String,
    pub p: usize,
    pub replication: usize,
    pub test_mse: f64,
    pub train_mse: f64,
    pub l1_diff: f64,
    pub l1_diff_per_n: f64,
    pub l2_diff: f64,
    pub linf_diff: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Wall-clock fit time; excluded from equality and from the written results.
    pub runtime_ms: f64,
}

impl PartialEq for SweepRecord {
    fn eq(&self, o: &Self) -> bool {
        self.scenario == o.scenario
            && self.p == o.p
            && self.replication == o.replication
            && self.test_mse.to_bits() == o.test_mse.to_bits()
            && self.train_mse.to_bits() == o.train_mse.to_bits()
            && self.l1_diff.to_bits() == o.l1_diff.to_bits()
            && self.l1_diff_per_n.to_bits() == o.l1_diff_per_n.to_bits()
            && self.l2_diff.to_bits() == o.l2_diff.to_bits()
            && self.linf_diff.to_bits() == o.linf_diff.to_bits()
            && self.iterations == o.iterations
            && self.converged == o.converged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub scenario: String,
    pub p: usize,
    pub replication: usize,
    pub error: Error,
}

/// Mean and standard error (`sd / sqrt(k)`, zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(values: impl Iterator<Item = f64> + Clone) -> Self {
        let k = values.clone().count();
        if k == 0 {
            return Stat {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = values.clone().sum::<f64>() / k as f64;
        let se = if k > 1 {
            let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, se }
    }
}

/// Per-dimension aggregate over the replications of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub scenario: String,
    pub p: usize,
    pub n_ok: usize,
    pub n_failed: usize,
    pub test_mse: Stat,
    pub train_mse: Stat,
    pub l1_diff: Stat,
    pub l1_diff_per_n: Stat,
    pub l2_diff: Stat,
    pub linf_diff: Stat,
    pub iterations: Stat,
    pub converged_frac: f64,
}

/// Output of [`run_scenario`], sorted by `(p, replication)`.
#[derive(Debug, Clone, Default)]
pub struct ScenarioRun {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<ReplicationFailure>,
    pub summaries: Vec<CurveSummary>,
    /// `p` values at which X-contamination shifted one cell although `⌊0.1 p⌋ = 0`.
    pub clamped_p: Vec<usize>,
}

fn mse(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    (0..x.rows())
        .map(|i| {
            let r = y[i] - dot(x.row(i), beta);
            r * r
        })
        .sum::<f64>()
        / x.rows() as f64
}

/// Metrics of a fitted coefficient vector on a dataset.
pub fn evaluate(
    scenario: &str,
    p: usize,
    replication: usize,
    data: &Dataset,
    fit: &FitResult,
) -> SweepRecord {
    let diff = sub(&fit.beta_hat, &data.beta_true);
    let l1 = norm1(&diff);
    SweepRecord {
        scenario: scenario.to_string(),
        p,
        replication,
        test_mse: mse(&data.x_test, &data.y_test, &fit.beta_hat),
        train_mse: mse(&data.x_train, &data.y_train, &fit.beta_hat),
        l1_diff: l1,
        l1_diff_per_n: l1 / data.n_train() as f64,
        l2_diff: norm2(&diff),
        linf_diff: norm_inf(&diff),
        iterations: fit.iterations,
        converged: fit.converged,
        runtime_ms: 0.0,
    }
}

/// Dataset of one `(scenario, p, replication)` cell together with the stream
/// positioned after data generation.
pub fn replication_data(scenario: &Scenario, p: usize, replication: usize) -> Result<(Dataset, RngStream)> {
    let mut rng = RngStream::for_cell(scenario.master_seed, &scenario.name, p, replication);
    let data = generate_dataset(&mut rng, &scenario.data, p)?;
    Ok((data, rng))
}

pub fn run_replication(
    scenario: &Scenario,
    p: usize,
    replication: usize,
) -> std::result::Result<SweepRecord, ReplicationFailure> {
    let fail = |error| ReplicationFailure {
        scenario: scenario.name.clone(),
        p,
        replication,
        error,
    };
    let (data, mut rng) = replication_data(scenario, p, replication).map_err(fail)?;
    let estimator = scenario.estimator.with_seed(rng.next_u64());
    let start = Instant::now();
    let fit = estimator.fit(&data.x_train, &data.y_train).map_err(fail)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut record = evaluate(&scenario.name, p, replication, &data, &fit);
    record.runtime_ms = runtime_ms;
    let finite = [
        record.test_mse,
        record.train_mse,
        record.l1_diff,
        record.l2_diff,
        record.linf_diff,
    ]
    .iter()
    .all(|v| v.is_finite());
    if !finite {
        return Err(fail(Error::EstimationFailed("non-finite metric".into())));
    }
    Ok(record)
}

/// Aggregates records per `p` in grid order. Records must be sorted by
/// `(p, replication)`; summation follows that order.
pub fn aggregate(
    scenario: &Scenario,
    records: &[SweepRecord],
    failures: &[ReplicationFailure],
) -> Vec<CurveSummary> {
    scenario
        .p_grid
        .iter()
        .map(|&p| {
            let rs: Vec<&SweepRecord> = records.iter().filter(|r| r.p == p).collect();
            let n_failed = failures.iter().filter(|f| f.p == p).count();
            let stat = |f: fn(&SweepRecord) -> f64| Stat::of(rs.iter().map(|r| f(r)));
            CurveSummary {
                scenario: scenario.name.clone(),
                p,
                n_ok: rs.len(),
                n_failed,
                test_mse: stat(|r| r.test_mse),
                train_mse: stat(|r| r.train_mse),
                l1_diff: stat(|r| r.l1_diff),
                l1_diff_per_n: stat(|r| r.l1_diff_per_n),
                l2_diff: stat(|r| r.l2_diff),
                linf_diff: stat(|r| r.linf_diff),
                iterations: stat(|r| r.iterations as f64),
                converged_frac: if rs.is_empty() {
                    f64::NAN
                } else {
                    rs.iter().filter(|r| r.converged).count() as f64 / rs.len() as f64
                },
            }
        })
        .collect()
}

/// Runs every `(p, replication)` cell on `workers` threads.
///
/// The output does not depend on `workers`: cells are independent and the
/// results are ordered by `(p, replication)` before aggregation.
pub fn run_scenario(scenario: &Scenario, workers: usize) -> Result<ScenarioRun> {
    scenario.validate()?;
    if workers < 1 {
        return Err(invalid("workers", "must be at least 1"));
    }
    let cells: Vec<(usize, usize)> = scenario
        .p_grid
        .iter()
        .flat_map(|&p| (0..scenario.replications).map(move |b| (p, b)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::EstimationFailed(format!("thread pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(p, b)| run_replication(scenario, p, b))
            .collect()
    });

    let mut run = ScenarioRun::default();
    for outcome in outcomes {
        match outcome {
            Ok(r) => run.records.push(r),
            Err(f) => run.failures.push(f),
        }
    }
    run.records.sort_by_key(|r| (r.p, r.replication));
    run.failures.sort_by_key(|f| (f.p, f.replication));
    run.summaries = aggregate(scenario, &run.records, &run.failures);
    if scenario.data.contamination.kind == crate::datagen::ContaminationKind::XRowwise
        && scenario.data.contamination.affected_rows(scenario.data.n_train) > 0
    {
        run.clamped_p = scenario
            .p_grid
            .iter()
            .copied()
            .filter(|&p| crate::datagen::ContaminationSpec::cells_per_row(p).1)
            .collect();
    }
    Ok(run)
}

/// Clean `n x p` training set (plus `n` test rows) for the breakdown probe,
/// with every coefficient active.
pub fn probe_dataset(seed: u64, n: usize, p: usize, snr: f64) -> Result<Dataset> {
    let spec = DataSpec {
        beta: BetaSpec {
            law: BetaLaw::Uniform,
            s: p,
        },
        n_train: n,
        n_test: n,
        snr,
        ..DataSpec::default()
    };
    generate_dataset(&mut RngStream::new(seed, 0), &spec, p)
}

/// Shifts the response of the highest-leverage training row (largest row
/// norm, lowest index on ties) by each magnitude in turn, refits, and
/// records `(magnitude, ‖β̂‖₂)`.
pub fn breakdown_probe(estimator: &Estimator, base: &Dataset, magnitudes: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !base.contaminated_rows.is_empty() {
        return Err(invalid("dataset", "breakdown probe needs clean training data"));
    }
    let x = &base.x_train;
    let target = (0..x.rows())
        .map(|i| (i, norm2(x.row(i))))
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
        .0;
    magnitudes
        .iter()
        .map(|&m| {
            let mut y = base.y_train.clone();
            y[target] += m;
            let fit = estimator.fit(x, &y)?;
            Ok((m, norm2(&fit.beta_hat)))
        })
        .collect()
}

/// Training-response variance used to scale the interpolation check.
pub fn train_response_variance(data: &Dataset) -> f64 {
    sample_variance(&data.y_train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::LtsConfig;

    fn small(estimator: Estimator) -> Scenario {
        Scenario {
            p_grid: vec![5, 20, 60],
            replications: 3,
            ..Scenario::new("t", DataSpec::default(), estimator)
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let s = small(Estimator::huber());
        assert_eq!(run_replication(&s, 20, 1).unwrap(), run_replication(&s, 20, 1).unwrap());
    }

    #[test]
    fn exact_fit_has_zero_differences() {
        let s = small(Estimator::MinL2);
        let (data, _) = replication_data(&s, 60, 0).unwrap();
        let fit = FitResult {
            beta_hat: data.beta_true.clone(),
            iterations: 0,
            converged: true,
            clean_subset: None,
            objective: 0.0,
        };
        let rec = evaluate("t", 60, 0, &data, &fit);
        assert_eq!((rec.l1_diff, rec.l2_diff, rec.linf_diff), (0.0, 0.0, 0.0));
        let noise: Vec<f64> = (0..data.x_test.rows())
            .map(|i| data.y_test[i] - dot(data.x_test.row(i), &data.beta_true))
            .collect();
        let noise_mse = noise.iter().map(|e| e * e).sum::<f64>() / noise.len() as f64;
        assert_eq!(rec.test_mse, noise_mse);
    }

    #[test]
    fn min_l2_interpolates_past_n() {
        let s = small(Estimator::MinL2);
        let (data, _) = replication_data(&s, 60, 2).unwrap();
        let rec = run_replication(&s, 60, 2).unwrap();
        assert!(rec.train_mse <= 1e-10 * train_response_variance(&data));
    }

    #[test]
    fn single_replication_summary_equals_record() {
        let s = Scenario {
            replications: 1,
            ..small(Estimator::MinL2)
        };
        let run = run_scenario(&s, 2).unwrap();
        for (sum, rec) in run.summaries.iter().zip(&run.records) {
            assert_eq!(sum.test_mse.mean, rec.test_mse);
            assert_eq!(sum.test_mse.se, 0.0);
            assert_eq!(sum.l1_diff.mean, rec.l1_diff);
            assert_eq!(sum.n_ok, 1);
        }
    }

    #[test]
    fn constant_metric_mean() {
        let s = small(Estimator::MinL2);
        let run = run_scenario(&s, 1).unwrap();
        for sum in &run.summaries {
            assert_eq!(sum.iterations.mean, 1.0);
            assert_eq!(sum.iterations.se, 0.0);
            assert_eq!(sum.converged_frac, 1.0);
            assert_eq!(sum.n_ok + sum.n_failed, 3);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = small(Estimator::Slts(LtsConfig::default()));
        let a = run_scenario(&s, 1).unwrap();
        let b = run_scenario(&s, 4).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.summaries, b.summaries);
    }

    #[test]
    fn summaries_equal_plain_reaggregation() {
        let s = small(Estimator::huber());
        let run = run_scenario(&s, 3).unwrap();
        for sum in &run.summaries {
            let vals: Vec<f64> = run.records.iter().filter(|r| r.p == sum.p).map(|r| r.test_mse).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!((sum.test_mse.mean - mean).abs() <= 1e-12 * mean.abs());
        }
    }

    #[test]
    fn failures_are_counted_not_averaged() {
        // sparse LTS needs n >= 4
        let mut s = small(Estimator::Slts(LtsConfig::default()));
        s.data.n_train = 3;
        let run = run_scenario(&s, 1).unwrap();
        assert!(run.records.is_empty());
        assert_eq!(run.failures.len(), 9);
        assert!(run.summaries.iter().all(|c| c.n_failed == 3 && c.test_mse.mean.is_nan()));
    }

    #[test]
    fn invalid_scenarios() {
        let mut s = small(Estimator::MinL2);
        s.p_grid = vec![10, 5];
        assert!(s.validate().is_err());
        s.p_grid = vec![];
        assert!(s.validate().is_err());
        let mut s = small(Estimator::MinL2);
        s.replications = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn breakdown_probe_zero_magnitude_matches_clean_fit() {
        let data = probe_dataset(3, 20, 1, 5.0).unwrap();
        let out = breakdown_probe(&Estimator::MinL2, &data, &[0.0]).unwrap();
        let clean = Estimator::MinL2.fit(&data.x_train, &data.y_train).unwrap();
        assert_eq!(out[0].1, norm2(&clean.beta_hat));
    }

    #[test]
    fn breakdown_probe_least_squares_grows_linearly() {
        let data = probe_dataset(4, 20, 1, 5.0).unwrap();
        let mags = [1e2, 1e3, 1e4, 1e5, 1e6];
        let out = breakdown_probe(&Estimator::MinL2, &data, &mags).unwrap();
        // slope shift is m * x_k / Σ x_i², so norms scale with m once m dominates
        for w in out.windows(2) {
            assert!(w[1].1 >= 0.9 * 10.0 * w[0].1 || w[0].0 < 1e3);
        }
        assert!(out[4].1 / out[2].1 > 90.0);
    }
}
