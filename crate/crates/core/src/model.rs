//! Observed data, priors and identification for the base-category reduced
//! multinomial probit model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MnpError, Result};
use crate::linalg;

/// Relative tolerance for the identification restriction on Sigma.
pub const IDENTIFICATION_TOLERANCE: f64 = 1e-8;

/// Choices `Y` in `{0, ..., p}` and the reduced `p x q` design of every
/// observation.
#[derive(Debug, Clone, PartialEq)]
pub struct MnpData {
    choices: Vec<usize>,
    designs: Vec<DMatrix<f64>>,
    p: usize,
    q: usize,
}

impl MnpData {
    pub fn new(choices: Vec<usize>, designs: Vec<DMatrix<f64>>) -> Result<Self> {
        if choices.is_empty() {
            return Err(MnpError::Argument("data needs at least one observation".into()));
        }
        if choices.len() != designs.len() {
            return Err(MnpError::Argument(format!(
                "{} choices but {} design matrices",
                choices.len(),
                designs.len()
            )));
        }
        let (p, q) = designs[0].shape();
        if p == 0 || q == 0 {
            return Err(MnpError::Argument(format!(
                "design matrices must be non-empty, got {p}x{q}"
            )));
        }
        for (i, (x, &y)) in designs.iter().zip(&choices).enumerate() {
            if x.shape() != (p, q) {
                return Err(MnpError::Argument(format!(
                    "observation {i}: design is {}x{}, expected {p}x{q}",
                    x.nrows(),
                    x.ncols()
                )));
            }
            if y > p {
                return Err(MnpError::Argument(format!(
                    "observation {i}: choice {y} outside 0..={p}"
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(MnpError::Argument(format!("observation {i}: non-finite covariate")));
            }
        }
        Ok(MnpData { choices, designs, p, q })
    }

    pub fn n(&self) -> usize {
        self.choices.len()
    }

    /// Number of non-base categories.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn designs(&self) -> &[DMatrix<f64>] {
        &self.designs
    }

    /// `n x p` matrix whose row `i` is `X_i beta`.
    pub fn linear_predictor(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n(), self.p);
        for (i, x) in self.designs.iter().enumerate() {
            let xb = x * beta;
            out.row_mut(i).copy_from(&xb.transpose());
        }
        out
    }
}

/// Scale restriction that makes Sigma identifiable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identification {
    /// `sigma_11^2 = 1`.
    FirstDiagonal,
    /// `trace(Sigma) = p`.
    Trace,
}

impl Identification {
    /// The working scale `s` implied by an expanded-scale covariance: the
    /// first standard deviation, or `sqrt(trace / p)`.
    pub fn scale_of(&self, sigma_tilde: &DMatrix<f64>) -> f64 {
        match self {
            Identification::FirstDiagonal => sigma_tilde[(0, 0)].sqrt(),
            Identification::Trace => (sigma_tilde.trace() / sigma_tilde.nrows() as f64).sqrt(),
        }
    }

    pub fn is_satisfied(&self, sigma: &DMatrix<f64>, tol: f64) -> bool {
        let p = sigma.nrows() as f64;
        match self {
            Identification::FirstDiagonal => (sigma[(0, 0)] - 1.0).abs() <= tol,
            Identification::Trace => (sigma.trace() - p).abs() <= tol * p,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Identification::FirstDiagonal => "first_diagonal",
            Identification::Trace => "trace",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "first_diagonal" | "firstdiagonal" | "first-diagonal" => Some(Identification::FirstDiagonal),
            "trace" => Some(Identification::Trace),
            _ => None,
        }
    }
}

/// Prior hyperparameters. The expanded-scale prior on `Sigma~` is
/// Inv-Wishart(`nu`, `alpha0_sq * scale`), and `beta ~ N(beta_mean, beta_cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    nu: f64,
    scale: DMatrix<f64>,
    alpha0_sq: f64,
    beta_cov: DMatrix<f64>,
    beta_precision: DMatrix<f64>,
    beta_mean: DVector<f64>,
    identification: Identification,
}

impl PriorSpec {
    pub fn new(
        nu: f64,
        scale: DMatrix<f64>,
        alpha0_sq: f64,
        beta_cov: DMatrix<f64>,
        beta_mean: DVector<f64>,
        identification: Identification,
    ) -> Result<Self> {
        let p = scale.nrows();
        if !scale.is_square() || p == 0 {
            return Err(MnpError::Argument("prior scale S must be square and non-empty".into()));
        }
        if !(nu >= p as f64) || !nu.is_finite() {
            return Err(MnpError::Argument(format!("nu = {nu} must be at least p = {p}")));
        }
        if !(alpha0_sq > 0.0) || !alpha0_sq.is_finite() {
            return Err(MnpError::Argument(format!("alpha0^2 = {alpha0_sq} must be positive")));
        }
        if !linalg::is_symmetric(&scale, 1e-12) {
            return Err(MnpError::Argument("prior scale S must be symmetric".into()));
        }
        linalg::cholesky(&scale).map_err(|e| MnpError::Argument(format!("prior scale S: {e}")))?;
        let ok = match identification {
            Identification::FirstDiagonal => (scale[(0, 0)] - 1.0).abs() <= IDENTIFICATION_TOLERANCE,
            Identification::Trace => (scale.trace() - p as f64).abs() <= IDENTIFICATION_TOLERANCE * p as f64,
        };
        if !ok {
            return Err(MnpError::Argument(format!(
                "prior scale S violates the {} restriction",
                identification.as_str()
            )));
        }
        let q = beta_mean.len();
        if beta_cov.shape() != (q, q) || q == 0 {
            return Err(MnpError::Argument(format!(
                "beta covariance is {}x{} but beta0 has length {q}",
                beta_cov.nrows(),
                beta_cov.ncols()
            )));
        }
        if !linalg::is_symmetric(&beta_cov, 1e-12) {
            return Err(MnpError::Argument("beta prior covariance A must be symmetric".into()));
        }
        let beta_precision =
            linalg::spd_inverse(&beta_cov).map_err(|e| MnpError::Argument(format!("beta prior covariance A: {e}")))?;
        Ok(PriorSpec {
            nu,
            scale,
            alpha0_sq,
            beta_cov,
            beta_precision,
            beta_mean,
            identification,
        })
    }

    /// `nu = p`, `alpha0^2 = nu`, `S = I`, `A = 100 I`, `beta0 = 0`.
    pub fn default_for(p: usize, q: usize, identification: Identification) -> Result<Self> {
        PriorSpec::new(
            p as f64,
            DMatrix::identity(p, p),
            p as f64,
            DMatrix::identity(q, q) * 100.0,
            DVector::zeros(q),
            identification,
        )
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    /// `S~ = alpha0^2 S`.
    pub fn scale_tilde(&self) -> DMatrix<f64> {
        &self.scale * self.alpha0_sq
    }

    pub fn alpha0_sq(&self) -> f64 {
        self.alpha0_sq
    }

    pub fn beta_cov(&self) -> &DMatrix<f64> {
        &self.beta_cov
    }

    pub fn beta_precision(&self) -> &DMatrix<f64> {
        &self.beta_precision
    }

    pub fn beta_mean(&self) -> &DVector<f64> {
        &self.beta_mean
    }

    pub fn identification(&self) -> Identification {
        self.identification
    }

    pub fn p(&self) -> usize {
        self.scale.nrows()
    }

    pub fn q(&self) -> usize {
        self.beta_mean.len()
    }

    pub(crate) fn check_dims(&self, data: &MnpData) -> Result<()> {
        if self.p() != data.p() || self.q() != data.q() {
            return Err(MnpError::Argument(format!(
                "prior is for p = {}, q = {} but data has p = {}, q = {}",
                self.p(),
                self.q(),
                data.p(),
                data.q()
            )));
        }
        Ok(())
    }
}

/// Current position of one Markov chain in identified form.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub beta: DVector<f64>,
    pub sigma: DMatrix<f64>,
    /// `n x p` latent utilities.
    pub latent: DMatrix<f64>,
    pub alpha: f64,
}

impl ChainState {
    /// Checks the identification restriction and latent/choice consistency.
    pub fn check_invariants(&self, data: &MnpData, identification: Identification) -> Result<()> {
        if !identification.is_satisfied(&self.sigma, IDENTIFICATION_TOLERANCE) {
            return Err(MnpError::Numeric(format!(
                "Sigma violates the {} restriction: {}",
                identification.as_str(),
                self.sigma
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(MnpError::Numeric(format!("alpha = {} is not positive", self.alpha)));
        }
        for (i, &y) in data.choices().iter().enumerate() {
            let k = classify(self.latent.row(i).iter().copied())?;
            if k != y {
                return Err(MnpError::Numeric(format!(
                    "latent row {i} classifies as {k} but the observed choice is {y}"
                )));
            }
        }
        Ok(())
    }
}

/// Differences every row of each `(p+1) x q` matrix against its last row,
/// i.e. applies `P = [I_p, -J]`.
pub fn reduce_to_base(unreduced: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let Some(first) = unreduced.first() else {
        return Ok(Vec::new());
    };
    let (rows, q) = first.shape();
    if rows < 2 {
        return Err(MnpError::Argument(format!(
            "unreduced design needs at least two rows, got {rows}"
        )));
    }
    unreduced
        .iter()
        .enumerate()
        .map(|(i, x0)| {
            if x0.shape() != (rows, q) {
                return Err(MnpError::Argument(format!(
                    "observation {i}: design is {}x{}, expected {rows}x{q}",
                    x0.nrows(),
                    x0.ncols()
                )));
            }
            let base = x0.row(rows - 1);
            Ok(DMatrix::from_fn(rows - 1, q, |r, c| x0[(r, c)] - base[c]))
        })
        .collect()
}

/// Maps a latent vector to its observed choice: 0 when every entry is
/// negative, otherwise the 1-based index of the maximum.
pub fn classify<I>(w: I) -> Result<usize>
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = w.into_iter();
    let mut best = 0usize;
    let mut best_value = 0.0f64;
    let mut tied = false;
    for (k, v) in iter.clone().enumerate() {
        if v.is_nan() {
            tied = true;
            break;
        }
        if v > best_value {
            best = k + 1;
            best_value = v;
            tied = false;
        } else if v == best_value {
            tied = true;
        }
    }
    if tied {
        return Err(MnpError::DegenerateTie { values: iter.collect() });
    }
    Ok(best)
}

/// True iff `classify(Z_i + s X_i beta) = Y_i` for every observation.
///
/// Because classification is invariant to positive rescaling, this is the
/// same condition as requiring the scaled latents `(Z_i + s X_i beta) / s` to
/// reproduce the observed choices.
pub fn check_constraint(z: &DMatrix<f64>, beta: &DVector<f64>, s: f64, data: &MnpData) -> Result<bool> {
    if !(s > 0.0) {
        return Err(MnpError::Argument(format!(
            "constraint scale must be positive, got {s}"
        )));
    }
    let xb = data.linear_predictor(beta);
    constraint_holds(z, &xb, s, data.choices())
}

pub(crate) fn constraint_holds(z: &DMatrix<f64>, xb: &DMatrix<f64>, s: f64, choices: &[usize]) -> Result<bool> {
    let p = z.ncols();
    for (i, &y) in choices.iter().enumerate() {
        let k = classify((0..p).map(|k| z[(i, k)] + s * xb[(i, k)]))?;
        if k != y {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Starting state: `beta = beta0`, `Sigma = I`, `alpha = 1` and latents
/// `+1` in the chosen coordinate, `-1` elsewhere.
pub fn init_state(data: &MnpData, prior: &PriorSpec) -> ChainState {
    let (n, p) = (data.n(), data.p());
    let latent = DMatrix::from_fn(n, p, |i, k| if data.choices()[i] == k + 1 { 1.0 } else { -1.0 });
    ChainState {
        beta: prior.beta_mean().clone(),
        sigma: DMatrix::identity(p, p),
        latent,
        alpha: 1.0,
    }
}
