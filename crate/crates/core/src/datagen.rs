//! Synthetic regression data: Gaussian designs, sparse coefficients, noise
//! calibrated to a signal-to-noise ratio, and contamination of training rows.
//!
//! Draw order inside [`generate_dataset`] is fixed (design, coefficients, noise,
//! retained columns, contamination) so a dataset is a pure function of its
//! random stream and parameters.

use crate::error::{invalid, Error, Result};
use crate::numkit::{sample_variance, Matrix, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    Independent,
    /// Covariance `I + rho * 11ᵀ`.
    Spiked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec {
    pub kind: DesignKind,
    pub mu: f64,
    pub rho: f64,
}

impl Default for DesignSpec {
    fn default() -> Self {
        Self {
            kind: DesignKind::Independent,
            mu: 0.0,
            rho: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaLaw {
    Gaussian,
    /// Components drawn from `U[1, 2]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaSpec {
    pub law: BetaLaw,
    /// Size of the true support.
    pub s: usize,
}

impl Default for BetaSpec {
    fn default() -> Self {
        Self {
            law: BetaLaw::Gaussian,
            s: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminationKind {
    None,
    /// Adds `c_out` to randomly chosen training responses.
    YAdditive,
    /// Adds `c_out` to a tenth of the cells of randomly chosen training rows.
    XRowwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub kind: ContaminationKind,
    /// Contamination radius in `[0, 1)`.
    pub r: f64,
    pub c_out: f64,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        Self {
            kind: ContaminationKind::None,
            r: 0.0,
            c_out: 100.0,
        }
    }

    pub fn y_additive(r: f64, c_out: f64) -> Self {
        Self {
            kind: ContaminationKind::YAdditive,
            r,
            c_out,
        }
    }

    pub fn x_rowwise(r: f64, c_out: f64) -> Self {
        Self {
            kind: ContaminationKind::XRowwise,
            r,
            c_out,
        }
    }

    /// `⌊r n⌋`
    pub fn affected_rows(&self, n_train: usize) -> usize {
        if self.kind == ContaminationKind::None {
            return 0;
        }
        floor_fraction(self.r, n_train)
    }

    /// Cells shifted per affected row for X-contamination and whether the
    /// `⌊0.1 p⌋` rule had to be raised to one.
    pub fn cells_per_row(p: usize) -> (usize, bool) {
        let raw = floor_fraction(0.1, p);
        if raw == 0 {
            (1.min(p), true)
        } else {
            (raw, false)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.r) {
            return Err(invalid("r", format!("must lie in [0, 1), got {}", self.r)));
        }
        if !self.c_out.is_finite() {
            return Err(invalid("c_out", "must be finite"));
        }
        Ok(())
    }
}

// `r * n` may land a hair below an integer (0.29 * 100 = 28.999...)
fn floor_fraction(r: f64, n: usize) -> usize {
    (r * n as f64 + 1e-9).floor().max(0.0) as usize
}

/// Everything [`generate_dataset`] needs besides the dimension `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub design: DesignSpec,
    pub beta: BetaSpec,
    pub contamination: ContaminationSpec,
    pub n_train: usize,
    pub n_test: usize,
    pub snr: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            design: DesignSpec::default(),
            beta: BetaSpec::default(),
            contamination: ContaminationSpec::none(),
            n_train: 50,
            n_test: 50,
            snr: 5.0,
        }
    }
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_train < 1 {
            return Err(invalid("n_train", "must be at least 1"));
        }
        if self.n_test < 1 {
            return Err(invalid("n_test", "must be at least 1"));
        }
        if self.n_train + self.n_test < 2 {
            return Err(invalid("n_train", "need at least two rows in total"));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(invalid("snr", format!("must be positive, got {}", self.snr)));
        }
        if self.beta.s < 1 {
            return Err(invalid("s", "must be at least 1"));
        }
        if !(self.design.rho >= 0.0 && self.design.rho.is_finite()) {
            return Err(invalid("rho", format!("must be non-negative, got {}", self.design.rho)));
        }
        if !self.design.mu.is_finite() {
            return Err(invalid("mu", "must be finite"));
        }
        self.contamination.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x_train: Matrix,
    pub y_train: Vec<f64>,
    pub x_test: Matrix,
    pub y_test: Vec<f64>,
    pub beta_true: Vec<f64>,
    pub sigma: f64,
    /// Ascending indices into the training rows.
    pub contaminated_rows: Vec<usize>,
    /// Set when X-contamination had to shift one cell although `⌊0.1 p⌋ = 0`.
    pub cells_clamped: bool,
}

impl Dataset {
    pub fn n_train(&self) -> usize {
        self.x_train.rows()
    }

    pub fn p(&self) -> usize {
        self.x_train.cols()
    }
}

/// `n` rows drawn i.i.d. from `N(mu 1, Σ)`.
///
/// The spiked case is realised as `mu 1 + z + sqrt(rho) g 1` with a shared
/// scalar `g` per row, which has covariance exactly `I + rho 11ᵀ`.
pub fn sample_design(rng: &mut RngStream, n: usize, p: usize, spec: &DesignSpec) -> Matrix {
    let spike = match spec.kind {
        DesignKind::Spiked if spec.rho > 0.0 => Some(spec.rho.sqrt()),
        _ => None,
    };
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        let start = data.len();
        data.extend((0..p).map(|_| spec.mu + rng.normal()));
        if let Some(scale) = spike {
            let shift = scale * rng.normal();
            data[start..].iter_mut().for_each(|v| *v += shift);
        }
    }
    Matrix::from_raw(n, p, data)
}

/// Coefficients with exactly `min(s, p)` non-zero entries at random positions.
pub fn sample_beta(rng: &mut RngStream, p: usize, spec: &BetaSpec) -> Vec<f64> {
    let draw = |rng: &mut RngStream| match spec.law {
        BetaLaw::Gaussian => loop {
            // a zero draw would break the support-size invariant
            let v = rng.normal();
            if v != 0.0 {
                break v;
            }
        },
        BetaLaw::Uniform => rng.uniform(1.0, 2.0),
    };
    if p <= spec.s {
        return (0..p).map(|_| draw(rng)).collect();
    }
    let support = rng
        .indices_without_replacement(spec.s, p)
        .expect("s < p checked above");
    let mut beta = vec![0.0; p];
    for j in support {
        beta[j] = draw(rng);
    }
    beta
}

/// Noise standard deviation giving `SampleVar(signal) / sigma² = snr`.
pub fn calibrate_noise(signal: &[f64], snr: f64) -> Result<f64> {
    if !(snr > 0.0) {
        return Err(invalid("snr", format!("must be positive, got {snr}")));
    }
    if signal.len() < 2 {
        return Err(Error::DegenerateSignal);
    }
    let var = sample_variance(signal);
    if !(var > 0.0) {
        return Err(Error::DegenerateSignal);
    }
    Ok((var / snr).sqrt())
}

/// Contaminates training rows only; the test rows are left untouched.
pub fn contaminate(rng: &mut RngStream, mut data: Dataset, spec: &ContaminationSpec) -> Result<Dataset> {
    let n = data.n_train();
    let m = spec.affected_rows(n);
    if m == 0 {
        return Ok(data);
    }
    let rows = rng.indices_without_replacement(m, n)?;
    match spec.kind {
        ContaminationKind::None => return Ok(data),
        ContaminationKind::YAdditive => {
            for &i in &rows {
                data.y_train[i] += spec.c_out;
            }
        }
        ContaminationKind::XRowwise => {
            let p = data.p();
            let (cells, clamped) = ContaminationSpec::cells_per_row(p);
            data.cells_clamped = clamped;
            for &i in &rows {
                let cols = rng.indices_without_replacement(cells, p)?;
                let row = data.x_train.row_mut(i);
                for j in cols {
                    row[j] += spec.c_out;
                }
            }
        }
    }
    data.contaminated_rows = rows;
    Ok(data)
}

/// Full generation protocol for one replication at dimension `p`.
///
/// For `p < s` the data are drawn from the `s`-column model and a random set
/// of `p` columns is retained, so the dropped signal acts as misspecification.
pub fn generate_dataset(rng: &mut RngStream, spec: &DataSpec, p: usize) -> Result<Dataset> {
    spec.validate()?;
    if p < 1 {
        return Err(invalid("p", "must be at least 1"));
    }
    let n = spec.n_train + spec.n_test;
    let p_gen = p.max(spec.beta.s);
    let x = sample_design(rng, n, p_gen, &spec.design);
    let beta = sample_beta(rng, p_gen, &spec.beta);
    let signal = x.matvec(&beta)?;
    let sigma = calibrate_noise(&signal, spec.snr)?;
    let y: Vec<f64> = signal.iter().map(|s| s + sigma * rng.normal()).collect();

    let (x, beta) = if p < p_gen {
        let keep = rng.indices_without_replacement(p, p_gen)?;
        let b = keep.iter().map(|&j| beta[j]).collect();
        (x.select_cols(&keep), b)
    } else {
        (x, beta)
    };

    let data = Dataset {
        x_train: x.row_range(0, spec.n_train),
        y_train: y[..spec.n_train].to_vec(),
        x_test: x.row_range(spec.n_train, n),
        y_test: y[spec.n_train..].to_vec(),
        beta_true: beta,
        sigma,
        contaminated_rows: Vec::new(),
        cells_clamped: false,
    };
    contaminate(rng, data, &spec.contamination)
}
