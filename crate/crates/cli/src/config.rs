//! Scenario configuration files.
//!
//! ```text
//! # comment
//! [scenario.minl2_clean]
//! estimator = min_l2
//! snr = 5
//! p_grid = 5, 10, 20, 50, 100
//! ```
//!
//! One `[scenario.NAME]` header per scenario (`NAME` from `[A-Za-z0-9_-]`),
//! followed by `key = value` lines. Blank lines and lines starting with `#`
//! are ignored. Keys may appear in any order, at most once per section.
//!
//! | key | values | default |
//! |-----|--------|---------|
//! | `design` | `independent`, `spiked` | `independent` |
//! | `mu` | real | `0` |
//! | `rho` | real ≥ 0 (spiked design only) | `0.25` |
//! | `beta` | `gaussian`, `uniform` | `gaussian` |
//! | `s` | count | `20` |
//! | `contamination` | `none`, `y`, `x` | `none` |
//! | `r` | real in `[0, 1)`; required unless `contamination = none` | |
//! | `c_out` | real | `100` |
//! | `n_train`, `n_test` | count | `50`, `50` |
//! | `snr` | real > 0 | `5` |
//! | `estimator` | `min_l2`, `ls_gd`, `huber`, `tukey`, `slts`, `slts_interp` | required |
//! | `delta` | real > 0 (`huber`) | `1.345` |
//! | `k` | real > 0 (`tukey`) | `4.685` |
//! | `max_iter`, `tol` | gradient-descent cap and `‖Δβ‖∞` tolerance | `100`, `0.0001` |
//! | `step_rule` | `bb` (Barzilai-Borwein), `doubling`: first trial step of each line search | `bb` |
//! | `alpha`, `n_starts`, `start_size`, `n_keep`, `initial_csteps`, `max_csteps`, `lambda_frac` | sparse LTS settings | `0.5`, `20`, `3`, `5`, `2`, `50`, `0.05` |
//! | `p_grid` | comma-separated ascending counts | 24-value default grid |
//! | `replications` | count ≥ 1 | `500` |
//! | `seed` | unsigned integer | `20240101` |
//! | `group` | name; scenarios sharing a group share their plots | scenario name |

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use ddlab::datagen::{
    BetaLaw, BetaSpec, ContaminationKind, ContaminationSpec, DataSpec, DesignKind, DesignSpec,
};
use ddlab::estimators::{Estimator, LtsConfig, SolverConfig, StepRule};
use ddlab::harness::Scenario;
use ddlab::losses::LossSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("scenario `{scenario}`, field `{field}`: {message}")]
    Field {
        scenario: String,
        field: String,
        message: String,
    },
}

const KEYS: [&str; 28] = [
    "design",
    "mu",
    "rho",
    "beta",
    "s",
    "contamination",
    "r",
    "c_out",
    "n_train",
    "n_test",
    "snr",
    "estimator",
    "delta",
    "k",
    "max_iter",
    "tol",
    "step_rule",
    "alpha",
    "n_starts",
    "start_size",
    "n_keep",
    "initial_csteps",
    "max_csteps",
    "lambda_frac",
    "p_grid",
    "replications",
    "seed",
    "group",
];

struct Section {
    name: String,
    entries: BTreeMap<String, (usize, String)>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub fn parse_config(text: &str) -> Result<Vec<Scenario>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let perr = |message: String| ConfigError::Parse { line, message };
        if let Some(header) = trimmed.strip_prefix('[') {
            let inner = header
                .strip_suffix(']')
                .ok_or_else(|| perr("unterminated section header".into()))?
                .trim();
            let name = inner
                .strip_prefix("scenario.")
                .ok_or_else(|| perr(format!("expected `[scenario.NAME]`, found `[{inner}]`")))?;
            if !valid_name(name) {
                return Err(perr(format!("invalid scenario name `{name}`")));
            }
            if !seen.insert(name.to_string()) {
                return Err(perr(format!("duplicate scenario `{name}`")));
            }
            sections.push(Section {
                name: name.to_string(),
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| perr(format!("expected `key = value`, found `{trimmed}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let section = sections
            .last_mut()
            .ok_or_else(|| perr("key outside of a `[scenario.NAME]` section".into()))?;
        if !KEYS.contains(&key) {
            return Err(perr(format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(perr(format!("missing value for `{key}`")));
        }
        if section
            .entries
            .insert(key.to_string(), (line, value.to_string()))
            .is_some()
        {
            return Err(perr(format!("duplicate key `{key}`")));
        }
    }
    sections.into_iter().map(resolve).collect()
}

struct Resolver {
    section: Section,
}

impl Resolver {
    fn field_err(&self, field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Field {
            scenario: self.section.name.clone(),
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.section.entries.remove(key)
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| ConfigError::Parse {
                line,
                message: format!("cannot parse `{v}` for `{key}`"),
            }),
        }
    }

    fn choice<T: Copy>(
        &mut self,
        key: &str,
        options: &[(&str, T)],
        default: Option<T>,
    ) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => default.ok_or_else(|| self.field_err(key, "is required")),
            Some((line, v)) => options
                .iter()
                .find(|(name, _)| *name == v)
                .map(|(_, t)| *t)
                .ok_or_else(|| ConfigError::Parse {
                    line,
                    message: format!(
                        "`{v}` is not a valid `{key}` (expected one of: {})",
                        options.iter().map(|o| o.0).collect::<Vec<_>>().join(", ")
                    ),
                }),
        }
    }

    /// Rejects keys that belong to a different estimator or are otherwise inapplicable.
    fn forbid(&mut self, keys: &[&str], why: &str) -> Result<(), ConfigError> {
        for key in keys {
            if self.section.entries.contains_key(*key) {
                return Err(self.field_err(key, format!("not applicable {why}")));
            }
        }
        Ok(())
    }
}

const GD_KEYS: [&str; 3] = ["max_iter", "tol", "step_rule"];
const LTS_KEYS: [&str; 7] = [
    "alpha",
    "n_starts",
    "start_size",
    "n_keep",
    "initial_csteps",
    "max_csteps",
    "lambda_frac",
];

fn resolve(section: Section) -> Result<Scenario, ConfigError> {
    let mut res = Resolver { section };
    let id = res.choice(
        "estimator",
        &Estimator::IDS.map(|id| (id, id)),
        None,
    )?;
    let mut estimator = Estimator::from_id(id).expect("listed identifier");

    let gd_why = "to non-gradient estimators";
    let lts_why = "to estimators without sparse LTS";
    match &mut estimator {
        Estimator::MinL2 => {
            res.forbid(&["delta", "k"], "to min_l2")?;
            res.forbid(&GD_KEYS, gd_why)?;
            res.forbid(&LTS_KEYS, lts_why)?;
        }
        Estimator::GradientDescent { loss, solver } => {
            res.forbid(&LTS_KEYS, lts_why)?;
            match loss {
                LossSpec::Huber { delta } => {
                    res.forbid(&["k"], "to huber")?;
                    *delta = res.get("delta", *delta)?;
                }
                LossSpec::Tukey { k } => {
                    res.forbid(&["delta"], "to tukey")?;
                    *k = res.get("k", *k)?;
                }
                LossSpec::Squared => res.forbid(&["delta", "k"], "to ls_gd")?,
            }
            let d = SolverConfig::default();
            *solver = SolverConfig {
                max_iter: res.get("max_iter", d.max_iter)?,
                tol_inf: res.get("tol", d.tol_inf)?,
                step_rule: res.choice(
                    "step_rule",
                    &[("bb", StepRule::BarzilaiBorwein), ("doubling", StepRule::Doubling)],
                    Some(d.step_rule),
                )?,
                ..d
            };
        }
        Estimator::Slts(cfg) | Estimator::SubsetInterpolator(cfg) => {
            res.forbid(&["delta", "k"], "to sparse LTS")?;
            res.forbid(&GD_KEYS, gd_why)?;
            let d = LtsConfig::default();
            *cfg = LtsConfig {
                alpha: res.get("alpha", d.alpha)?,
                n_starts: res.get("n_starts", d.n_starts)?,
                start_size: res.get("start_size", d.start_size)?,
                n_keep: res.get("n_keep", d.n_keep)?,
                initial_csteps: res.get("initial_csteps", d.initial_csteps)?,
                max_csteps: res.get("max_csteps", d.max_csteps)?,
                lambda_frac: res.get("lambda_frac", d.lambda_frac)?,
                ..d
            };
        }
    }

    let dd = DataSpec::default();
    let kind = res.choice(
        "design",
        &[("independent", DesignKind::Independent), ("spiked", DesignKind::Spiked)],
        Some(dd.design.kind),
    )?;
    if kind == DesignKind::Independent {
        res.forbid(&["rho"], "to the independent design")?;
    }
    let design = DesignSpec {
        kind,
        mu: res.get("mu", dd.design.mu)?,
        rho: res.get("rho", dd.design.rho)?,
    };
    let beta = BetaSpec {
        law: res.choice(
            "beta",
            &[("gaussian", BetaLaw::Gaussian), ("uniform", BetaLaw::Uniform)],
            Some(dd.beta.law),
        )?,
        s: res.get("s", dd.beta.s)?,
    };
    let ckind = res.choice(
        "contamination",
        &[
            ("none", ContaminationKind::None),
            ("y", ContaminationKind::YAdditive),
            ("x", ContaminationKind::XRowwise),
        ],
        Some(ContaminationKind::None),
    )?;
    let contamination = if ckind == ContaminationKind::None {
        res.forbid(&["r", "c_out"], "without contamination")?;
        ContaminationSpec::none()
    } else {
        if !res.section.entries.contains_key("r") {
            return Err(res.field_err("r", "is required when contamination is set"));
        }
        let r = res.get("r", 0.0)?;
        let c_out = res.get("c_out", 100.0)?;
        ContaminationSpec {
            kind: ckind,
            r,
            c_out,
        }
    };
    let data = DataSpec {
        design,
        beta,
        contamination,
        n_train: res.get("n_train", dd.n_train)?,
        n_test: res.get("n_test", dd.n_test)?,
        snr: res.get("snr", dd.snr)?,
    };

    let mut scenario = Scenario::new(res.section.name.clone(), data, estimator);
    if let Some((line, v)) = res.raw("p_grid") {
        scenario.p_grid = v
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError::Parse {
                line,
                message: format!("`p_grid` must be a comma-separated list of counts, found `{v}`"),
            })?;
    }
    scenario.replications = res.get("replications", scenario.replications)?;
    scenario.master_seed = res.get("seed", scenario.master_seed)?;
    if let Some((line, g)) = res.raw("group") {
        if !valid_name(&g) {
            return Err(ConfigError::Parse {
                line,
                message: format!("invalid group name `{g}`"),
            });
        }
        scenario.group = Some(g);
    }
    debug_assert!(res.section.entries.is_empty());

    scenario.validate().map_err(|e| match e {
        ddlab::Error::InvalidConfig { field, reason } => res.field_err(field, reason),
        other => res.field_err("scenario", other.to_string()),
    })?;
    Ok(scenario)
}

/// Writes scenarios back in the configuration format. Every key is written,
/// so `parse_config(&serialize_config(s)) == s`.
pub fn serialize_config(scenarios: &[Scenario]) -> String {
    let mut out = String::new();
    for (i, s) in scenarios.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[scenario.{}]", s.name);
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("estimator", s.estimator.id().to_string());
        match &s.estimator {
            Estimator::MinL2 => {}
            Estimator::GradientDescent { loss, solver } => {
                match loss {
                    LossSpec::Huber { delta } => kv("delta", delta.to_string()),
                    LossSpec::Tukey { k } => kv("k", k.to_string()),
                    LossSpec::Squared => {}
                }
                kv("max_iter", solver.max_iter.to_string());
                kv("tol", solver.tol_inf.to_string());
                kv(
                    "step_rule",
                    match solver.step_rule {
                        StepRule::BarzilaiBorwein => "bb",
                        StepRule::Doubling => "doubling",
                    }
                    .into(),
                );
            }
            Estimator::Slts(c) | Estimator::SubsetInterpolator(c) => {
                kv("alpha", c.alpha.to_string());
                kv("n_starts", c.n_starts.to_string());
                kv("start_size", c.start_size.to_string());
                kv("n_keep", c.n_keep.to_string());
                kv("initial_csteps", c.initial_csteps.to_string());
                kv("max_csteps", c.max_csteps.to_string());
                kv("lambda_frac", c.lambda_frac.to_string());
            }
        }
        let d = &s.data;
        match d.design.kind {
            DesignKind::Independent => kv("design", "independent".into()),
            DesignKind::Spiked => {
                kv("design", "spiked".into());
                kv("rho", d.design.rho.to_string());
            }
        }
        kv("mu", d.design.mu.to_string());
        kv(
            "beta",
            match d.beta.law {
                BetaLaw::Gaussian => "gaussian",
                BetaLaw::Uniform => "uniform",
            }
            .into(),
        );
        kv("s", d.beta.s.to_string());
        match d.contamination.kind {
            ContaminationKind::None => kv("contamination", "none".into()),
            k => {
                kv(
                    "contamination",
                    if k == ContaminationKind::YAdditive { "y" } else { "x" }.into(),
                );
                kv("r", d.contamination.r.to_string());
                kv("c_out", d.contamination.c_out.to_string());
            }
        }
        kv("n_train", d.n_train.to_string());
        kv("n_test", d.n_test.to_string());
        kv("snr", d.snr.to_string());
        kv(
            "p_grid",
            s.p_grid
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        );
        kv("replications", s.replications.to_string());
        kv("seed", s.master_seed.to_string());
        if let Some(g) = &s.group {
            kv("group", g.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ddlab::harness::DEFAULT_P_GRID;

    #[test]
    fn minimal_section_gets_defaults() {
        let s = parse_config("[scenario.a]\nestimator = min_l2\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].p_grid, DEFAULT_P_GRID.to_vec());
        assert_eq!(s[0].p_grid.len(), 24);
        assert_eq!(s[0].data, DataSpec::default());
        assert_eq!(s[0].estimator, Estimator::MinL2);
    }

    #[test]
    fn estimator_defaults() {
        let s = parse_config(
            "[scenario.h]\nestimator = huber\n[scenario.t]\nestimator = tukey\n[scenario.l]\nestimator = slts\n",
        )
        .unwrap();
        assert_eq!(s[0].estimator, Estimator::huber());
        assert_eq!(s[1].estimator, Estimator::tukey());
        match &s[2].estimator {
            Estimator::Slts(c) => assert_eq!(c.alpha, 0.5),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn radius_out_of_range_names_the_field() {
        let err = parse_config("[scenario.a]\nestimator = min_l2\ncontamination = y\nr = 1.5\n").unwrap_err();
        match err {
            ConfigError::Field { field, .. } => assert_eq!(field, "r"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("[scenario.a]\nestimator = min_l2\nfoo = 1\n", 3),
            ("estimator = min_l2\n", 1),
            ("[scenario.a]\n\n# c\nestimator = min_l2\nsnr = five\n", 5),
            ("[scenario.a]\nestimator = min_l2\nestimator = huber\n", 3),
            ("[scenario.a]\nestimator = min_l2\n[scenario.a]\nestimator = huber\n", 3),
            ("[scenario.a]\nestimator = lasso\n", 2),
            ("[scenario.a]\nestimator = min_l2\np_grid = 5, ten\n", 3),
            ("[other]\n", 1),
            ("[scenario.a]\nestimator\n", 2),
        ];
        for (text, line) in cases {
            match parse_config(text) {
                Err(ConfigError::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn semantic_errors() {
        let cases = [
            ("[scenario.a]\n", "estimator"),
            ("[scenario.a]\nestimator = min_l2\ndelta = 2\n", "delta"),
            ("[scenario.a]\nestimator = huber\nalpha = 0.7\n", "alpha"),
            ("[scenario.a]\nestimator = min_l2\ncontamination = x\n", "r"),
            ("[scenario.a]\nestimator = min_l2\nr = 0.1\n", "r"),
            ("[scenario.a]\nestimator = min_l2\np_grid = 10, 5\n", "p_grid"),
            ("[scenario.a]\nestimator = min_l2\nreplications = 0\n", "replications"),
            ("[scenario.a]\nestimator = huber\ndelta = -1\n", "delta"),
            ("[scenario.a]\nestimator = min_l2\nrho = 0.3\n", "rho"),
        ];
        for (text, field) in cases {
            match parse_config(text) {
                Err(ConfigError::Field { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip() {
        let text = "\
[scenario.a]
estimator = huber
delta = 1.5
max_iter = 250
step_rule = doubling
design = spiked
rho = 0.3
mu = 5
beta = uniform
contamination = x
r = 0.25
c_out = 10000
snr = 0.1
p_grid = 5, 50, 500
replications = 7
seed = 99
group = fig1

[scenario.b]
estimator = slts_interp
lambda_frac = 0
n_starts = 10
start_size = 25

[scenario.c]
estimator = tukey
contamination = y
r = 0.5
";
        let parsed = parse_config(text).unwrap();
        let again = parse_config(&serialize_config(&parsed)).unwrap();
        assert_eq!(parsed, again);
        assert_eq!(serialize_config(&again), serialize_config(&parsed));
    }

    #[test]
    fn basic_table_grid_is_expressible() {
        let mut n = 0;
        for design in ["independent", "spiked"] {
            for snr in [0.1, 0.5, 2.0, 5.0] {
                for beta in ["gaussian", "uniform"] {
                    for (cont, radii) in [("none", &[][..]), ("x", &[0.1, 0.25, 0.5][..]), ("y", &[0.1, 0.25, 0.5][..])] {
                        let mut variants: Vec<Option<f64>> = radii.iter().copied().map(Some).collect();
                        if variants.is_empty() {
                            variants.push(None);
                        }
                        for r in variants {
                            for est in Estimator::IDS {
                                let mut text = format!(
                                    "[scenario.s{n}]\nestimator = {est}\ndesign = {design}\nmu = 0\nsnr = {snr}\nbeta = {beta}\n\
                                     n_train = 50\nn_test = 50\ncontamination = {cont}\n"
                                );
                                if let Some(r) = r {
                                    text += &format!("r = {r}\nc_out = 100\n");
                                }
                                let s = &parse_config(&text).unwrap()[0];
                                assert_eq!(s.data.snr, snr);
                                assert_eq!(s.data.n_train, 50);
                                assert_eq!(s.data.contamination.r, r.unwrap_or(0.0));
                                if r.is_some() {
                                    assert_eq!(s.data.contamination.c_out, 100.0);
                                }
                                assert_eq!(s.estimator.id(), est);
                                assert_eq!(s.p_grid, DEFAULT_P_GRID.to_vec());
                                n += 1;
                            }
                        }
                    }
                }
            }
        }
        assert_eq!(n, 2 * 4 * 2 * 7 * 6);
    }
}
