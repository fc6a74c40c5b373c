//! Library side of the `ddlab` command-line tool: configuration files, CSV
//! and SVG output, and the `run` / `probe-breakdown` commands.

pub mod config;
pub mod csv_out;
pub mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use ddlab::estimators::Estimator;
use ddlab::harness::{self, CurveSummary, ReplicationFailure, Scenario, SweepRecord};

pub use config::{parse_config, serialize_config, ConfigError};
use plot::{Metric, PlotOptions};

/// Environment variable that replaces the master seed of every scenario.
pub const SEED_ENV: &str = "DDLAB_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error(transparent)]
    Core(#[from] ddlab::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub plots: bool,
    /// Run only the scenario with this name.
    pub only: Option<String>,
    pub seed_override: Option<u64>,
}

impl RunManifest {
    pub fn new(config: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            config: config.into(),
            out_dir: out_dir.into(),
            workers: default_workers(),
            plots: false,
            only: None,
            seed_override: None,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Parses the seed override variable's value.
pub fn parse_seed(value: &str) -> Result<u64, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got `{value}`")))
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<ReplicationFailure>,
    pub summaries: Vec<CurveSummary>,
    /// Human-readable notes (timings, clamped X-contamination cells).
    pub notes: Vec<String>,
    pub written: Vec<PathBuf>,
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the selected scenarios of the manifest and writes `records.csv`,
/// `summary.csv`, `failures.csv` and, when requested, the plots.
pub fn run(manifest: &RunManifest) -> Result<RunReport, CliError> {
    if manifest.workers < 1 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&manifest.config).map_err(|source| CliError::Io {
        path: manifest.config.clone(),
        source,
    })?;
    let mut scenarios = parse_config(&text).map_err(|source| CliError::Config {
        path: manifest.config.clone(),
        source,
    })?;
    if let Some(name) = &manifest.only {
        scenarios.retain(|s| &s.name == name);
        if scenarios.is_empty() {
            return Err(CliError::Usage(format!("no scenario named `{name}` in {}", manifest.config.display())));
        }
    }
    if let Some(seed) = manifest.seed_override {
        for s in &mut scenarios {
            s.master_seed = seed;
        }
    }
    run_scenarios(&scenarios, manifest)
}

pub fn run_scenarios(scenarios: &[Scenario], manifest: &RunManifest) -> Result<RunReport, CliError> {
    create_dir(&manifest.out_dir)?;
    let mut report = RunReport::default();
    for s in scenarios {
        let start = Instant::now();
        let run = harness::run_scenario(s, manifest.workers)?;
        let fit_ms: f64 = run.records.iter().map(|r| r.runtime_ms).sum();
        report.notes.push(format!(
            "{}: {} cells in {:.2} s ({:.1} ms fitting, {} failed)",
            s.name,
            s.p_grid.len() * s.replications,
            start.elapsed().as_secs_f64(),
            fit_ms,
            run.failures.len()
        ));
        if !run.clamped_p.is_empty() {
            report.notes.push(format!(
                "{}: X-contamination shifted one cell per row at p = {:?} where 0.1 p < 1",
                s.name, run.clamped_p
            ));
        }
        report.records.extend(run.records);
        report.failures.extend(run.failures);
        report.summaries.extend(run.summaries);
    }

    let out = &manifest.out_dir;
    for (name, contents) in [
        ("records.csv", csv_out::records_csv(&report.records)),
        ("summary.csv", csv_out::summary_csv(&report.summaries)),
        ("failures.csv", csv_out::failures_csv(&report.failures)),
    ] {
        let path = out.join(name);
        csv_out::write_file(&path, &contents)?;
        report.written.push(path);
    }

    if manifest.plots {
        let dir = out.join("plots");
        create_dir(&dir)?;
        let mut groups: Vec<(&str, Vec<&Scenario>)> = Vec::new();
        for s in scenarios {
            match groups.iter_mut().find(|g| g.0 == s.group_name()) {
                Some(g) => g.1.push(s),
                None => groups.push((s.group_name(), vec![s])),
            }
        }
        for (group, members) in groups {
            let sums: Vec<CurveSummary> = report
                .summaries
                .iter()
                .filter(|c| members.iter().any(|m| m.name == c.scenario))
                .cloned()
                .collect();
            let mut metrics = vec![Metric::TestMse, Metric::TrainMse, Metric::L1Diff];
            if members.iter().any(|m| m.estimator.is_iterative()) {
                metrics.push(Metric::Iterations);
            }
            for metric in metrics {
                let opts = PlotOptions {
                    log_y: metric != Metric::Iterations && metric != Metric::TrainMse,
                    title: Some(format!("{group}: {}", metric.name())),
                    ..PlotOptions::default()
                };
                let path = dir.join(format!("{group}-{}.svg", metric.name()));
                plot::emit_plot(&sums, metric, &path, &opts)?;
                report.written.push(path);
            }
        }
    }
    Ok(report)
}

pub const PROBE_N: usize = 20;
pub const PROBE_SNR: f64 = 5.0;
pub const PROBE_MAGNITUDES: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

/// Breakdown probe on a clean `n = 20, p = 1` dataset; writes
/// `<out>/breakdown.csv` and returns `(magnitude, ‖β̂‖₂)` rows.
pub fn probe_breakdown(estimator_id: &str, out_dir: &Path, seed: u64) -> Result<Vec<(f64, f64)>, CliError> {
    let estimator = Estimator::from_id(estimator_id).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown estimator `{estimator_id}` (expected one of: {})",
            Estimator::IDS.join(", ")
        ))
    })?;
    let data = harness::probe_dataset(seed, PROBE_N, 1, PROBE_SNR)?;
    let rows = harness::breakdown_probe(&estimator.with_seed(seed), &data, &PROBE_MAGNITUDES)?;
    create_dir(out_dir)?;
    csv_out::write_file(&out_dir.join("breakdown.csv"), &csv_out::breakdown_csv(estimator_id, &rows))?;
    Ok(rows)
}
