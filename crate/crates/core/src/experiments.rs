//! Simulation-study data generation, paired original-versus-corrected runs
//! and Monte Carlo choice probabilities.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, EssReport};
use crate::distributions::{self, RngStream};
use crate::error::{MnpError, Result};
use crate::linalg;
use crate::model::{self, MnpData, PriorSpec};
use crate::samplers::{self, AlgorithmVariant, ChainOutput, SamplerConfig};

/// Observations `rows` draw covariate column `j` uniformly on `bounds[j]`,
/// independently for every latent row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateBlock {
    pub rows: Range<usize>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStudyConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub beta_true: Vec<f64>,
    /// Row-major `p x p`.
    pub sigma_true: Vec<f64>,
    pub covariate_blocks: Vec<CovariateBlock>,
    pub seed: u64,
}

impl SimStudyConfig {
    /// Fifty observations, two non-base categories and two covariates with
    /// `beta = (-sqrt 2, 1)` and unit variances correlated at 0.5. The
    /// first 25 observations draw covariates on (-0.5, 0.5) and (-1, 1),
    /// the last 25 on (0.4, 1.5) and (0.8, 3).
    pub fn simulation_study(seed: u64) -> Self {
        SimStudyConfig {
            n: 50,
            p: 2,
            q: 2,
            beta_true: vec![-std::f64::consts::SQRT_2, 1.0],
            sigma_true: vec![1.0, 0.5, 0.5, 1.0],
            covariate_blocks: Self::split_blocks(50),
            seed,
        }
    }

    /// The two-block covariate layout of the simulation study for `n`
    /// observations, split at `n / 2`.
    pub fn split_blocks(n: usize) -> Vec<CovariateBlock> {
        let half = n / 2;
        vec![
            CovariateBlock {
                rows: 0..half,
                bounds: vec![(-0.5, 0.5), (-1.0, 1.0)],
            },
            CovariateBlock {
                rows: half..n,
                bounds: vec![(0.4, 1.5), (0.8, 3.0)],
            },
        ]
    }

    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p, self.p, &self.sigma_true)
    }

    pub fn beta_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_true)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p, q) = (self.n, self.p, self.q);
        if n == 0 || p == 0 || q == 0 {
            return Err(MnpError::Argument(format!(
                "n, p and q must be positive (n = {n}, p = {p}, q = {q})"
            )));
        }
        if self.beta_true.len() != q {
            return Err(MnpError::Argument(format!(
                "beta_true has {} entries, expected {q}",
                self.beta_true.len()
            )));
        }
        if self.sigma_true.len() != p * p {
            return Err(MnpError::Argument(format!(
                "sigma_true has {} entries, expected {}",
                self.sigma_true.len(),
                p * p
            )));
        }
        let sigma = self.sigma_matrix();
        if !linalg::is_symmetric(&sigma, 1e-12) {
            return Err(MnpError::Argument("sigma_true must be symmetric".into()));
        }
        linalg::cholesky(&sigma).map_err(|e| MnpError::Argument(format!("sigma_true: {e}")))?;
        let mut covered = vec![false; n];
        for block in &self.covariate_blocks {
            if block.rows.start >= block.rows.end || block.rows.end > n {
                return Err(MnpError::Argument(format!(
                    "covariate block {:?} outside 0..{n}",
                    block.rows
                )));
            }
            if block.bounds.len() != q {
                return Err(MnpError::Argument(format!(
                    "covariate block {:?} has {} column bounds, expected {q}",
                    block.rows,
                    block.bounds.len()
                )));
            }
            for &(lo, hi) in &block.bounds {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(MnpError::Argument(format!("invalid uniform bounds ({lo}, {hi})")));
                }
            }
            for i in block.rows.clone() {
                if covered[i] {
                    return Err(MnpError::Argument(format!(
                        "observation {} is in two covariate blocks",
                        i + 1
                    )));
                }
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(MnpError::Argument(format!(
                "observation {} is in no covariate block",
                i + 1
            )));
        }
        Ok(())
    }
}

/// Generated data plus the latents that produced it (kept for audit only).
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: MnpData,
    pub latent: DMatrix<f64>,
}

/// Draws covariates blockwise, `W_i ~ N(X_i beta, Sigma)` and `Y_i = classify(W_i)`.
pub fn generate_simulation(config: &SimStudyConfig, rng: &mut RngStream) -> Result<SimulatedData> {
    config.validate()?;
    let (n, p, q) = (config.n, config.p, config.q);
    let mut designs = vec![DMatrix::zeros(p, q); n];
    for block in &config.covariate_blocks {
        for x in &mut designs[block.rows.clone()] {
            for r in 0..p {
                for (c, &(lo, hi)) in block.bounds.iter().enumerate() {
                    x[(r, c)] = rng.uniform_range(lo, hi);
                }
            }
        }
    }
    let beta = config.beta_vector();
    let lower = linalg::cholesky(&config.sigma_matrix())?.l();
    let mut latent = DMatrix::zeros(n, p);
    let mut choices = Vec::with_capacity(n);
    for (i, x) in designs.iter().enumerate() {
        let w = distributions::sample_mvn_factored(&(x * &beta), &lower, rng);
        choices.push(model::classify(w.iter().copied())?);
        latent.row_mut(i).copy_from(&w.transpose());
    }
    Ok(SimulatedData {
        data: MnpData::new(choices, designs)?,
        latent,
    })
}

/// Per-parameter comparison inside a paired run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterComparison {
    pub label: String,
    pub ks_statistic: f64,
    pub ess_a: EssReport,
    pub ess_b: EssReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedRunReport {
    pub variant_a: String,
    pub variant_b: String,
    pub parameters: Vec<ParameterComparison>,
    pub violation_fraction_a: f64,
    pub violation_fraction_b: f64,
    /// Wall-clock time of chain b over chain a.
    pub wall_clock_ratio: f64,
}

impl PairedRunReport {
    pub fn parameter(&self, label: &str) -> Option<&ParameterComparison> {
        self.parameters.iter().find(|p| p.label == label)
    }
}

#[derive(Debug, Clone)]
pub struct PairedRun {
    pub report: PairedRunReport,
    pub chain_a: ChainOutput,
    pub chain_b: ChainOutput,
}

/// Runs `variant_a` on substream 0 and `variant_b` on substream 1 of
/// `config.seed`, then compares every transformed parameter. The chains
/// run on two threads when more than one core is available.
pub fn run_paired_comparison(
    data: &MnpData,
    prior: &PriorSpec,
    variant_a: AlgorithmVariant,
    variant_b: AlgorithmVariant,
    config: &SamplerConfig,
) -> Result<PairedRun> {
    if variant_a.identification() != variant_b.identification() {
        return Err(MnpError::Argument(format!(
            "algorithms {variant_a} and {variant_b} use different identification restrictions"
        )));
    }
    let run = |variant, stream| {
        let mut rng = RngStream::substream(config.seed, stream);
        samplers::run_chain(variant, data, prior, config, &mut rng)
    };
    let concurrent = std::thread::available_parallelism().map_or(1, |n| n.get()) > 1;
    let (chain_a, chain_b) = if concurrent {
        std::thread::scope(|scope| {
            let handle = scope.spawn(|| run(variant_b, 1));
            let a = run(variant_a, 0);
            let b = handle
                .join()
                .unwrap_or_else(|_| Err(MnpError::Numeric("chain thread panicked".into())));
            (a, b)
        })
    } else {
        (run(variant_a, 0), run(variant_b, 1))
    };
    let (chain_a, chain_b) = (chain_a?, chain_b?);
    let report = compare_outputs(&chain_a, &chain_b)?;
    Ok(PairedRun {
        report,
        chain_a,
        chain_b,
    })
}

/// Per-parameter KS statistics and ESS for two finished chains.
pub fn compare_outputs(a: &ChainOutput, b: &ChainOutput) -> Result<PairedRunReport> {
    let series_a = diagnostics::transform_draws(&a.sigmas, &a.betas, a.identification)?;
    let series_b = diagnostics::transform_draws(&b.sigmas, &b.betas, b.identification)?;
    let mut parameters = Vec::with_capacity(series_a.len());
    for sa in &series_a {
        let Some(sb) = series_b.iter().find(|s| s.label() == sa.label()) else {
            continue;
        };
        let cmp = diagnostics::compare_chains(sa, sb)?;
        parameters.push(ParameterComparison {
            label: sa.label().to_string(),
            ks_statistic: cmp.ks_statistic,
            ess_a: diagnostics::effective_sample_size(sa)?.with_seconds(a.wall_clock_seconds),
            ess_b: diagnostics::effective_sample_size(sb)?.with_seconds(b.wall_clock_seconds),
        });
    }
    Ok(PairedRunReport {
        variant_a: a.variant.to_string(),
        variant_b: b.variant.to_string(),
        parameters,
        violation_fraction_a: a.violation_fraction(),
        violation_fraction_b: b.violation_fraction(),
        wall_clock_ratio: b.wall_clock_seconds / a.wall_clock_seconds,
    })
}

/// Monte Carlo frequencies of each choice `0..=p` for latents
/// `W ~ N(X beta, Sigma)`.
pub fn estimate_choice_probabilities(
    beta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    x: &DMatrix<f64>,
    mc_draws: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if mc_draws < 10_000 {
        return Err(MnpError::Argument(format!(
            "need at least 10^4 Monte Carlo draws, got {mc_draws}"
        )));
    }
    if x.ncols() != beta.len() || x.nrows() != sigma.nrows() {
        return Err(MnpError::Argument(format!(
            "design {}x{} does not match beta ({}) and Sigma ({}x{})",
            x.nrows(),
            x.ncols(),
            beta.len(),
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let p = sigma.nrows();
    let mean = x * beta;
    let lower = linalg::cholesky(sigma)?.l();
    let mut counts = vec![0usize; p + 1];
    for _ in 0..mc_draws {
        let w = distributions::sample_mvn_factored(&mean, &lower, rng);
        counts[model::classify(w.iter().copied())?] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / mc_draws as f64).collect())
}

/// Reduced design `[I_p, g]` with `g_k = log(price_k) - log(price_0)`.
pub fn design_from_prices(prices: &[f64]) -> Result<DMatrix<f64>> {
    if prices.len() < 2 {
        return Err(MnpError::Argument("need prices for at least two categories".into()));
    }
    if let Some(bad) = prices.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(MnpError::Argument(format!("price {bad} must be positive")));
    }
    let p = prices.len() - 1;
    let base = prices[0].ln();
    Ok(DMatrix::from_fn(p, p + 1, |r, c| {
        if c < p {
            (r == c) as u8 as f64
        } else {
            prices[r + 1].ln() - base
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_study_shapes_and_consistency() {
        let mut all_seen = [false; 3];
        for seed in 0..100 {
            let cfg = SimStudyConfig::simulation_study(seed);
            let mut rng = RngStream::new(seed);
            let sim = generate_simulation(&cfg, &mut rng).unwrap();
            assert_eq!((sim.data.n(), sim.data.p(), sim.data.q()), (50, 2, 2));
            for (i, &y) in sim.data.choices().iter().enumerate() {
                assert_eq!(model::classify(sim.latent.row(i).iter().copied()).unwrap(), y);
                all_seen[y] = true;
            }
            let x = &sim.data.designs()[30];
            assert!(x[(0, 0)] > 0.4 && x[(1, 1)] > 0.8);
        }
        assert_eq!(all_seen, [true; 3]);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = SimStudyConfig::simulation_study(0);
        cfg.n = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimStudyConfig::simulation_study(0);
        cfg.covariate_blocks[0].bounds[0] = (1.0, -1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = SimStudyConfig::simulation_study(0);
        cfg.covariate_blocks.pop();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn symmetric_choice_frequencies() {
        // beta = 0, Sigma = I: categories 1 and 2 are exchangeable.
        let mut cfg = SimStudyConfig::simulation_study(1);
        cfg.n = 200_000;
        cfg.beta_true = vec![0.0, 0.0];
        cfg.sigma_true = vec![1.0, 0.0, 0.0, 1.0];
        cfg.covariate_blocks = SimStudyConfig::split_blocks(cfg.n);
        let mut rng = RngStream::new(1);
        let sim = generate_simulation(&cfg, &mut rng).unwrap();
        let n = sim.data.n() as f64;
        let freq: Vec<f64> = (0..3)
            .map(|k| sim.data.choices().iter().filter(|&&y| y == k).count() as f64 / n)
            .collect();
        // P(both negative) = 1/4; the rest splits evenly.
        let se = (0.25f64 * 0.75 / n).sqrt();
        assert!((freq[0] - 0.25).abs() < 4.0 * se);
        assert!((freq[1] - 0.375).abs() < 4.0 * se);
        assert!((freq[2] - 0.375).abs() < 4.0 * se);
    }

    #[test]
    fn choice_probabilities() {
        let mut rng = RngStream::new(2);
        let x = DMatrix::identity(2, 2);
        let sigma = DMatrix::identity(2, 2);
        let probs = estimate_choice_probabilities(&DVector::zeros(2), &sigma, &x, 100_000, &mut rng).unwrap();
        assert_eq!(probs.iter().sum::<f64>(), 1.0);
        let se = (2.0 * 0.375 * 0.625 / 100_000.0f64).sqrt();
        assert!((probs[1] - probs[2]).abs() < 3.0 * se);

        let dominant = DVector::from_vec(vec![10.0, 0.0]);
        let probs = estimate_choice_probabilities(&dominant, &sigma, &x, 10_000, &mut rng).unwrap();
        assert!(probs[1] > 0.999);
        assert!(estimate_choice_probabilities(&dominant, &sigma, &x, 10, &mut rng).is_err());
    }

    #[test]
    fn choice_probabilities_scale_invariant() {
        let x = DMatrix::from_row_slice(2, 2, &[0.3, 1.2, -0.4, 0.5]);
        let beta = DVector::from_vec(vec![-std::f64::consts::SQRT_2, 1.0]);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let c = 2.5;
        let a = estimate_choice_probabilities(&beta, &sigma, &x, 50_000, &mut RngStream::new(3)).unwrap();
        let b = estimate_choice_probabilities(&(&beta * c), &(&sigma * (c * c)), &x, 50_000, &mut RngStream::new(3))
            .unwrap();
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-3, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn price_design() {
        let x = design_from_prices(&[1.0, 2.0, 0.5]).unwrap();
        assert_eq!(x.shape(), (2, 3));
        assert_eq!(x[(0, 0)], 1.0);
        assert_eq!(x[(0, 1)], 0.0);
        assert!((x[(0, 2)] - 2.0f64.ln()).abs() < 1e-15);
        assert!((x[(1, 2)] - 0.5f64.ln()).abs() < 1e-15);
        assert!(design_from_prices(&[1.0, -2.0]).is_err());
    }
}
