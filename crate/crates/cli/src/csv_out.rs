//! CSV result files.
//!
//! Column order:
//!
//! * `records.csv`: `scenario, p, replication, test_mse, train_mse, l1_diff,
//!   l1_diff_per_n, l2_diff, linf_diff, iterations, converged`
//! * `summary.csv`: `scenario, p, n_ok, n_failed`, then `<metric>_mean,
//!   <metric>_se` for `test_mse, train_mse, l1_diff, l1_diff_per_n, l2_diff,
//!   linf_diff, iterations`, then `converged_frac`
//! * `failures.csv`: `scenario, p, replication, error`
//! * `breakdown.csv`: `estimator, magnitude, beta_norm`
//!
//! Rows are sorted by `(scenario, p, replication)`. Reals are written in
//! decimal notation rounded to 10 significant digits with trailing zeros
//! dropped; undefined values (a mean over zero records) are written as `NaN`.
//! Fit times are not written so that identical runs give identical files.

use std::path::Path;

use ddlab::harness::{CurveSummary, ReplicationFailure, Stat, SweepRecord};

use crate::CliError;

/// Decimal rendering with 10 significant digits.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (9 - exp).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    // rounding may carry into a new leading digit (9.9999999999 -> 10.000000000)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    if digits.trim_start_matches('0').len() > 10 && decimals > 0 {
        s = format!("{v:.prec$}", prec = decimals - 1);
    }
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

const RECORD_HEADER: [&str; 11] = [
    "scenario",
    "p",
    "replication",
    "test_mse",
    "train_mse",
    "l1_diff",
    "l1_diff_per_n",
    "l2_diff",
    "linf_diff",
    "iterations",
    "converged",
];

const METRICS: [&str; 7] = [
    "test_mse",
    "train_mse",
    "l1_diff",
    "l1_diff_per_n",
    "l2_diff",
    "linf_diff",
    "iterations",
];

pub fn records_csv(records: &[SweepRecord]) -> String {
    let mut rows: Vec<&SweepRecord> = records.iter().collect();
    rows.sort_by(|a, b| (&a.scenario, a.p, a.replication).cmp(&(&b.scenario, b.p, b.replication)));
    let mut w = writer();
    w.write_record(RECORD_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.p.to_string(),
            r.replication.to_string(),
            format_real(r.test_mse),
            format_real(r.train_mse),
            format_real(r.l1_diff),
            format_real(r.l1_diff_per_n),
            format_real(r.l2_diff),
            format_real(r.linf_diff),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn summary_csv(summaries: &[CurveSummary]) -> String {
    let mut rows: Vec<&CurveSummary> = summaries.iter().collect();
    rows.sort_by(|a, b| (&a.scenario, a.p).cmp(&(&b.scenario, b.p)));
    let mut header = vec!["scenario".to_string(), "p".into(), "n_ok".into(), "n_failed".into()];
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_se"));
    }
    header.push("converged_frac".into());
    let mut w = writer();
    w.write_record(&header).expect("in-memory write");
    for s in rows {
        let stats: [Stat; 7] = [
            s.test_mse,
            s.train_mse,
            s.l1_diff,
            s.l1_diff_per_n,
            s.l2_diff,
            s.linf_diff,
            s.iterations,
        ];
        let mut row = vec![
            s.scenario.clone(),
            s.p.to_string(),
            s.n_ok.to_string(),
            s.n_failed.to_string(),
        ];
        for st in stats {
            row.push(format_real(st.mean));
            row.push(format_real(st.se));
        }
        row.push(format_real(s.converged_frac));
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

pub fn failures_csv(failures: &[ReplicationFailure]) -> String {
    let mut rows: Vec<&ReplicationFailure> = failures.iter().collect();
    rows.sort_by(|a, b| (&a.scenario, a.p, a.replication).cmp(&(&b.scenario, b.p, b.replication)));
    let mut w = writer();
    w.write_record(["scenario", "p", "replication", "error"]).expect("in-memory write");
    for f in rows {
        w.write_record([
            f.scenario.clone(),
            f.p.to_string(),
            f.replication.to_string(),
            f.error.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn breakdown_csv(estimator: &str, rows: &[(f64, f64)]) -> String {
    let mut w = writer();
    w.write_record(["estimator", "magnitude", "beta_norm"]).expect("in-memory write");
    for (m, norm) in rows {
        w.write_record([estimator.to_string(), format_real(*m), format_real(*norm)])
            .expect("in-memory write");
    }
    finish(w)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
