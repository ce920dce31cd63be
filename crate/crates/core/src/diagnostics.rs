//! Autocorrelation, effective sample size, parameter transforms and
//! two-sample comparisons over retained draws.

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{MnpError, Result};
use crate::model::Identification;

/// Probability grid used for quantile-quantile pairs: 0.005, 0.010, ..., 0.995.
pub const QQ_POINTS: usize = 199;

/// One labelled parameter trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    label: String,
    values: Vec<f64>,
}

impl ScalarSeries {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if values.len() < 2 {
            return Err(MnpError::DegenerateSeries {
                label,
                reason: format!("needs at least 2 values, got {}", values.len()),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(MnpError::DegenerateSeries {
                label,
                reason: format!("non-finite value at position {pos}"),
            });
        }
        Ok(ScalarSeries { label, values })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    fn require_len(&self, min: usize) -> Result<()> {
        if self.values.len() < min {
            return Err(MnpError::DegenerateSeries {
                label: self.label.clone(),
                reason: format!("needs at least {min} values, got {}", self.values.len()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EssReport {
    pub ess: f64,
    pub ess_per_second: Option<f64>,
    /// Largest lag included in the autocorrelation sum.
    pub lag_cutoff: usize,
}

impl EssReport {
    pub fn with_seconds(mut self, seconds: f64) -> Self {
        self.ess_per_second = (seconds > 0.0).then(|| self.ess / seconds);
        self
    }
}

/// Biased (divide-by-T) autocovariances for every lag `0..T`, via FFT.
fn autocovariance(series: &ScalarSeries) -> Result<Vec<f64>> {
    let n = series.len();
    let mean = series.mean();
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .values()
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    let acov: Vec<f64> = buf.iter().take(n).map(|c| c.re * scale).collect();
    let spread = series.values().iter().map(|v| (v - mean).abs()).fold(0.0f64, f64::max);
    if !(acov[0] > 0.0) || spread <= 1e-14 * mean.abs().max(1.0) {
        return Err(MnpError::DegenerateSeries {
            label: series.label().to_string(),
            reason: "zero variance".into(),
        });
    }
    Ok(acov)
}

/// Sample autocorrelations for lags `0..=max_lag`.
pub fn autocorrelation(series: &ScalarSeries, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= series.len() {
        return Err(MnpError::Argument(format!(
            "max lag {max_lag} must be below the series length {}",
            series.len()
        )));
    }
    let acov = autocovariance(series)?;
    Ok(acov[..=max_lag].iter().map(|c| c / acov[0]).collect())
}

/// `T / (1 + 2 sum rho_t)` with the sum truncated by the initial positive
/// sequence rule: lag pairs `(2m, 2m+1)` are added while their sum stays
/// positive. The result is clipped to `(0, T]`.
pub fn effective_sample_size(series: &ScalarSeries) -> Result<EssReport> {
    series.require_len(100)?;
    let acov = autocovariance(series)?;
    let n = series.len();
    let rho = |t: usize| acov[t] / acov[0];
    let mut tau = -1.0;
    let mut lag_cutoff = 0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = rho(2 * m) + rho(2 * m + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag_cutoff = 2 * m + 1;
        m += 1;
    }
    let t = n as f64;
    let ess = if tau > 0.0 { (t / tau).min(t) } else { t };
    Ok(EssReport {
        ess,
        ess_per_second: None,
        lag_cutoff,
    })
}

/// Labelled series for every coefficient, each free log-variance and the
/// Fisher-type transform `log((1 + rho_jk) / (1 - rho_jk))` of every
/// correlation. The variance fixed by first-diagonal identification is
/// left out.
pub fn transform_draws(
    sigmas: &[DMatrix<f64>],
    betas: &[DVector<f64>],
    identification: Identification,
) -> Result<Vec<ScalarSeries>> {
    let mut out = Vec::new();
    if let Some(first) = betas.first() {
        for j in 0..first.len() {
            out.push(ScalarSeries::new(beta_label(j), betas.iter().map(|b| b[j]).collect())?);
        }
    }
    let Some(first) = sigmas.first() else {
        return Ok(out);
    };
    let p = first.nrows();
    for k in 0..p {
        if k == 0 && identification == Identification::FirstDiagonal {
            continue;
        }
        let vals = sigmas
            .iter()
            .map(|s| {
                if s[(k, k)] > 0.0 {
                    Ok(s[(k, k)].ln())
                } else {
                    Err(MnpError::Numeric(format!("non-positive variance {}", s[(k, k)])))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(ScalarSeries::new(log_variance_label(k), vals)?);
    }
    for j in 0..p {
        for k in (j + 1)..p {
            let vals = sigmas
                .iter()
                .map(|s| fisher_transform(correlation(s, j, k)))
                .collect::<Result<Vec<_>>>()?;
            out.push(ScalarSeries::new(fisher_label(j, k), vals)?);
        }
    }
    Ok(out)
}

pub fn beta_label(j: usize) -> String {
    format!("beta_{}", j + 1)
}

pub fn log_variance_label(k: usize) -> String {
    format!("log_sigma2_{}", k + 1)
}

pub fn fisher_label(j: usize, k: usize) -> String {
    format!("fisher_rho_{}_{}", j + 1, k + 1)
}

/// `sigma_jk / sqrt(sigma_jj sigma_kk)`.
pub fn correlation(sigma: &DMatrix<f64>, j: usize, k: usize) -> f64 {
    sigma[(j, k)] / (sigma[(j, j)] * sigma[(k, k)]).sqrt()
}

pub fn fisher_transform(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(MnpError::Numeric(format!("correlation {rho} outside (-1, 1)")));
    }
    Ok(((1.0 + rho) / (1.0 - rho)).ln())
}

pub fn inverse_fisher_transform(value: f64) -> f64 {
    (0.5 * value).tanh()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainComparison {
    pub ks_statistic: f64,
    /// Matched empirical quantiles `(a, b)` on the 199-point grid.
    pub qq_pairs: Vec<(f64, f64)>,
}

/// Two-sample Kolmogorov-Smirnov statistic plus matched quantiles.
pub fn compare_chains(a: &ScalarSeries, b: &ScalarSeries) -> Result<ChainComparison> {
    a.require_len(100)?;
    b.require_len(100)?;
    let sa = a.sorted();
    let sb = b.sorted();
    let qq_pairs = qq_grid()
        .map(|p| (quantile_sorted(&sa, p), quantile_sorted(&sb, p)))
        .collect();
    Ok(ChainComparison {
        ks_statistic: ks_sorted(&sa, &sb),
        qq_pairs,
    })
}

pub fn qq_grid() -> impl Iterator<Item = f64> {
    (1..=QQ_POINTS).map(|k| k as f64 * 0.005)
}

/// Two-sample KS statistic of two series.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    ks_sorted(&sa, &sb)
}

fn ks_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q975: f64,
}

impl Summary {
    /// Whether the central 95% interval contains `value`.
    pub fn covers(&self, value: f64) -> bool {
        self.q025 <= value && value <= self.q975
    }
}

pub fn summarize(series: &ScalarSeries) -> Summary {
    let n = series.len() as f64;
    let mean = series.mean();
    let var = series.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let s = series.sorted();
    Summary {
        mean,
        sd: var.sqrt(),
        q025: quantile_sorted(&s, 0.025),
        q25: quantile_sorted(&s, 0.25),
        q50: quantile_sorted(&s, 0.5),
        q75: quantile_sorted(&s, 0.75),
        q975: quantile_sorted(&s, 0.975),
    }
}
