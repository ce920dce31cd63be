//! Random-variate layer used by every sampler step.
//!
//! All draws come from a [`RngStream`], a ChaCha8 generator keyed by a 64-bit
//! seed and a stream index, so a (seed, call sequence) pair reproduces the
//! same numbers on every platform.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{MnpError, Result};
use crate::linalg;

/// Attempt cap for the truncated-normal rejection loops.
pub const TRUNCATED_NORMAL_MAX_ATTEMPTS: u64 = 10_000_000;

/// Seeded random stream. Chains derived from one master seed use distinct
/// ChaCha stream ids, which never overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Stream `index` of the family keyed by `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        RngStream {
            seed,
            stream: index,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.inner)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Which side of `bound` the truncated normal lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncSide {
    /// Support `[bound, inf)`.
    LowerOnly,
    /// Support `(-inf, bound]`.
    UpperOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncSpec {
    pub bound: f64,
    pub side: TruncSide,
}

impl TruncSpec {
    pub fn lower(bound: f64) -> Self {
        TruncSpec {
            bound,
            side: TruncSide::LowerOnly,
        }
    }

    pub fn upper(bound: f64) -> Self {
        TruncSpec {
            bound,
            side: TruncSide::UpperOnly,
        }
    }

    /// True when `x` lies strictly inside the truncation region.
    pub fn admits(&self, x: f64) -> bool {
        match self.side {
            TruncSide::LowerOnly => x > self.bound,
            TruncSide::UpperOnly => x < self.bound,
        }
    }
}

/// One draw from the chi-square distribution with `df` degrees of freedom,
/// generated as Gamma(df/2, scale 2).
pub fn sample_chi_square(df: f64, rng: &mut RngStream) -> Result<f64> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(MnpError::Argument(format!(
            "chi-square degrees of freedom must be positive, got {df}"
        )));
    }
    let gamma = Gamma::new(0.5 * df, 2.0).map_err(|e| MnpError::Argument(format!("chi-square({df}): {e}")))?;
    Ok(gamma.sample(rng))
}

/// `mean + L z` with `L` the lower Cholesky factor of `cov`.
pub fn sample_mvn(mean: &DVector<f64>, cov: &DMatrix<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    if cov.nrows() != mean.len() {
        return Err(MnpError::Argument(format!(
            "mean has length {} but covariance is {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = linalg::cholesky(cov)?;
    Ok(sample_mvn_factored(mean, &chol.l(), rng))
}

/// Same as [`sample_mvn`] with a precomputed lower factor.
pub fn sample_mvn_factored(mean: &DVector<f64>, lower: &DMatrix<f64>, rng: &mut RngStream) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| rng.standard_normal());
    mean + lower * z
}

/// Draw from Inv-Wishart(`df`, `scale`) with the Bartlett decomposition.
///
/// With `scale = L L^T` and `A` the Bartlett factor of a Wishart(`df`, I)
/// draw, `L (A A^T)^-1 L^T` is the inverse-Wishart draw. Only `scale` is
/// factored, so near-singular posteriors stay well conditioned.
pub fn sample_inv_wishart(df: f64, scale: &DMatrix<f64>, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if !(df > d as f64 - 1.0) {
        return Err(MnpError::Argument(format!(
            "inverse-Wishart needs df > d - 1, got df = {df} with d = {d}"
        )));
    }
    let l = linalg::cholesky(scale)
        .map_err(|e| MnpError::Argument(format!("inverse-Wishart scale: {e}")))?
        .l();
    sample_inv_wishart_factored(df, &l, rng)
}

/// As [`sample_inv_wishart`] but takes the lower Cholesky factor of the
/// scale, for repeated draws from one distribution.
pub fn sample_inv_wishart_factored(df: f64, scale_lower: &DMatrix<f64>, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    let d = scale_lower.nrows();
    // sqrt(chi2_{df - i}) on the diagonal, N(0,1) below.
    let mut bartlett = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        bartlett[(i, i)] = sample_chi_square(df - i as f64, rng)?.sqrt();
        for j in 0..i {
            bartlett[(i, j)] = rng.standard_normal();
        }
    }
    // M^T = A^-1 L^T, then the draw is M M^T.
    let mt = bartlett
        .solve_lower_triangular(&scale_lower.transpose())
        .ok_or_else(|| MnpError::Numeric("singular Bartlett factor".into()))?;
    Ok(linalg::symmetrize(mt.transpose() * mt))
}

/// Draw from N(`mu`, `var`) restricted to the region described by `trunc`.
///
/// Upper truncation is mapped onto lower truncation by negation. For the
/// standardized lower bound `a`, `a <= 0` uses plain rejection from the
/// untruncated normal and `a > 0` uses translated-exponential rejection.
pub fn sample_truncated_normal(mu: f64, var: f64, trunc: TruncSpec, rng: &mut RngStream) -> Result<f64> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(MnpError::Argument(format!(
            "truncated normal variance must be positive, got {var}"
        )));
    }
    if !trunc.bound.is_finite() || !mu.is_finite() {
        return Err(MnpError::Argument(format!(
            "truncated normal needs finite mean and bound, got mu = {mu}, bound = {}",
            trunc.bound
        )));
    }
    let sd = var.sqrt();
    let (sign, center, bound) = match trunc.side {
        TruncSide::LowerOnly => (1.0, mu, trunc.bound),
        TruncSide::UpperOnly => (-1.0, -mu, -trunc.bound),
    };
    let a = (bound - center) / sd;
    for _ in 0..TRUNCATED_NORMAL_MAX_ATTEMPTS {
        let z = if a <= 0.0 {
            standard_lower_tail_naive(a, rng)?
        } else {
            standard_lower_tail_exponential(a, rng)?
        };
        // Rounding in the affine map can land on or just past the bound.
        let x = sign * (center + sd * z);
        if trunc.admits(x) {
            return Ok(x);
        }
    }
    Err(MnpError::SamplerStuck {
        attempts: TRUNCATED_NORMAL_MAX_ATTEMPTS,
        context: format!("truncated normal mu = {mu}, var = {var}, {trunc:?}"),
    })
}

/// Standard normal conditioned on `z > a` by rejection from N(0, 1).
pub fn standard_lower_tail_naive(a: f64, rng: &mut RngStream) -> Result<f64> {
    for _ in 0..TRUNCATED_NORMAL_MAX_ATTEMPTS {
        let z = rng.standard_normal();
        if z > a {
            return Ok(z);
        }
    }
    Err(MnpError::SamplerStuck {
        attempts: TRUNCATED_NORMAL_MAX_ATTEMPTS,
        context: format!("naive normal tail above {a}"),
    })
}

/// Standard normal conditioned on `z > a` by rejection from a translated
/// exponential proposal with the optimal rate `(a + sqrt(a^2 + 4)) / 2`.
pub fn standard_lower_tail_exponential(a: f64, rng: &mut RngStream) -> Result<f64> {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    for _ in 0..TRUNCATED_NORMAL_MAX_ATTEMPTS {
        let z = a + rng.exp1() / rate;
        let accept = (-0.5 * (z - rate) * (z - rate)).exp();
        if z > a && rng.uniform() <= accept {
            return Ok(z);
        }
    }
    Err(MnpError::SamplerStuck {
        attempts: TRUNCATED_NORMAL_MAX_ATTEMPTS,
        context: format!("exponential normal tail above {a}"),
    })
}
