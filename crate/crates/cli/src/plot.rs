//! Static SVG line charts of summary curves: one polyline per scenario,
//! circle markers at each grid point, a legend, and linear or log axes.

use std::fmt::Write as _;
use std::path::Path;

use ddlab::harness::CurveSummary;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    TestMse,
    TrainMse,
    L1Diff,
    L1DiffPerN,
    L2Diff,
    LinfDiff,
    Iterations,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::TestMse,
        Metric::TrainMse,
        Metric::L1Diff,
        Metric::L1DiffPerN,
        Metric::L2Diff,
        Metric::LinfDiff,
        Metric::Iterations,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TestMse => "test_mse",
            Metric::TrainMse => "train_mse",
            Metric::L1Diff => "l1_diff",
            Metric::L1DiffPerN => "l1_diff_per_n",
            Metric::L2Diff => "l2_diff",
            Metric::LinfDiff => "linf_diff",
            Metric::Iterations => "iterations",
        }
    }

    pub fn mean(self, s: &CurveSummary) -> f64 {
        match self {
            Metric::TestMse => s.test_mse.mean,
            Metric::TrainMse => s.train_mse.mean,
            Metric::L1Diff => s.l1_diff.mean,
            Metric::L1DiffPerN => s.l1_diff_per_n.mean,
            Metric::L2Diff => s.l2_diff.mean,
            Metric::LinfDiff => s.linf_diff.mean,
            Metric::Iterations => s.iterations.mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub log_x: bool,
    pub log_y: bool,
    pub title: Option<String>,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            log_x: true,
            log_y: false,
            title: None,
            width: 720.0,
            height: 460.0,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 190.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let tr = |v: f64| if log { v.log10() } else { v };
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(tr(v)), b.max(tr(v)))
        });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            lo -= pad;
            hi += pad;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        Axis { log, lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        (t - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let decades = (self.hi - self.lo).round() as i32;
            let step = (decades / 8).max(1);
            (0..=decades)
                .step_by(step as usize)
                .map(|d| 10f64.powi(self.lo as i32 + d))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * mag)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * mag);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|i| i as f64 * step).collect()
        }
    }
}

/// Renders one curve per scenario, in order of first appearance. Points
/// that cannot be drawn (non-finite, or non-positive on a log axis) are
/// skipped.
pub fn render_svg(summaries: &[CurveSummary], metric: Metric, opts: &PlotOptions) -> String {
    let mut curves: Vec<(&str, Vec<(f64, f64)>)> = Vec::new();
    for s in summaries {
        let idx = match curves.iter().position(|c| c.0 == s.scenario) {
            Some(i) => i,
            None => {
                curves.push((&s.scenario, Vec::new()));
                curves.len() - 1
            }
        };
        let (x, y) = (s.p as f64, metric.mean(s));
        let ok = |v: f64, log: bool| v.is_finite() && (!log || v > 0.0);
        if ok(x, opts.log_x) && ok(y, opts.log_y) {
            curves[idx].1.push((x, y));
        }
    }
    for c in &mut curves {
        c.1.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let pts = || curves.iter().flat_map(|c| c.1.iter());
    let xa = Axis::new(pts().map(|p| p.0), opts.log_x);
    let ya = Axis::new(pts().map(|p| p.1), opts.log_y);
    let (w, h) = (opts.width, opts.height);
    let pw = w - MARGIN_L - MARGIN_R;
    let ph = h - MARGIN_T - MARGIN_B;
    let sx = |v: f64| MARGIN_L + xa.frac(v) * pw;
    let sy = |v: f64| MARGIN_T + (1.0 - ya.frac(v)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let title = opts.title.clone().unwrap_or_else(|| metric.name().to_string());
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + pw / 2.0,
        escape(&title)
    );

    // axes and ticks
    let _ = writeln!(
        out,
        r#"<g stroke="black" fill="none"><rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw:.1}" height="{ph:.1}"/></g>"#
    );
    out.push_str("<g class=\"x-ticks\">\n");
    for t in xa.ticks() {
        let x = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            MARGIN_T,
            MARGIN_T + ph,
            MARGIN_T + ph + 16.0,
            tick_label(t)
        );
    }
    out.push_str("</g>\n<g class=\"y-ticks\">\n");
    for t in ya.ticks() {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            y + 4.0,
            tick_label(t)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">p{}</text>"#,
        MARGIN_L + pw / 2.0,
        h - 12.0,
        if opts.log_x { " (log scale)" } else { "" }
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(18 {:.1}) rotate(-90)" text-anchor="middle">{}{}</text>"#,
        MARGIN_T + ph / 2.0,
        metric.name(),
        if opts.log_y { " (log scale)" } else { "" }
    );

    for (i, (name, points)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<g class="curve" data-scenario="{}">"#, escape(name));
        if points.len() > 1 {
            let coords: Vec<String> = points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                coords.join(" ")
            );
        }
        for &(x, y) in points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        out.push_str("</g>\n");
        let ly = MARGIN_T + 10.0 + 20.0 * i as f64;
        let lx = MARGIN_L + pw + 15.0;
        let _ = writeln!(
            out,
            r#"<g class="legend-entry"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_plot(
    summaries: &[CurveSummary],
    metric: Metric,
    path: &Path,
    opts: &PlotOptions,
) -> Result<(), CliError> {
    crate::csv_out::write_file(path, &render_svg(summaries, metric, opts))
}
