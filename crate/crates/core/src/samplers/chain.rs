#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;
#[cfg(target_arch = "wasm32")]
use web_time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::distributions::RngStream;
use crate::error::{MnpError, Result};
use crate::model::{init_state, ChainState, Identification, MnpData, PriorSpec};

use super::steps::transition;
use super::variant::{AlgorithmVariant, Family, SamplerConfig};

/// Retained latent draws for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTrace {
    pub index: usize,
    pub draws: Vec<DVector<f64>>,
}

/// Everything one chain produced after burn-in and thinning.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub variant: AlgorithmVariant,
    pub identification: Identification,
    /// 1-based iteration number of every retained draw.
    pub iterations: Vec<usize>,
    pub betas: Vec<DVector<f64>>,
    /// Identified covariance draws.
    pub sigmas: Vec<DMatrix<f64>>,
    pub alphas: Vec<f64>,
    /// Inverse-Wishart redraws spent in the covariance step, per retained draw.
    pub rejections: Vec<u64>,
    /// Whether the accepted covariance draw broke the latent/choice
    /// constraint, per retained draw.
    pub violations: Vec<bool>,
    pub latent_traces: Vec<LatentTrace>,
    pub total_iterations: usize,
    pub total_rejections: u64,
    pub total_violations: usize,
    pub wall_clock_seconds: f64,
}

impl ChainOutput {
    pub fn retained(&self) -> usize {
        self.iterations.len()
    }

    /// Share of retained iterations whose covariance draw broke the
    /// constraint.
    pub fn violation_fraction(&self) -> f64 {
        if self.violations.is_empty() {
            return 0.0;
        }
        self.violations.iter().filter(|&&v| v).count() as f64 / self.violations.len() as f64
    }

    /// Accepted covariance draws over all draws attempted, across the whole run.
    pub fn acceptance_rate(&self) -> f64 {
        self.total_iterations as f64 / (self.total_iterations as f64 + self.total_rejections as f64)
    }

    /// Retained values of `beta_j` (0-based).
    pub fn beta_component(&self, j: usize) -> Vec<f64> {
        self.betas.iter().map(|b| b[j]).collect()
    }
}

pub(crate) fn check_compatible(variant: AlgorithmVariant, data: &MnpData, prior: &PriorSpec) -> Result<()> {
    prior.check_dims(data)?;
    if prior.identification() != variant.identification() {
        return Err(MnpError::Argument(format!(
            "algorithm {variant} requires the {} restriction but the prior uses {}",
            variant.identification().as_str(),
            prior.identification().as_str()
        )));
    }
    if matches!(variant.family, Family::One | Family::Three) && prior.beta_mean().iter().any(|&b| b != 0.0) {
        return Err(MnpError::Argument(format!(
            "algorithm {variant} requires beta0 = 0; use 2.1 or 2.2 for a non-zero prior mean"
        )));
    }
    Ok(())
}

/// Runs one chain from the default starting state.
pub fn run_chain(
    variant: AlgorithmVariant,
    data: &MnpData,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    run_chain_from(init_state(data, prior), variant, data, prior, config, rng)
}

pub fn run_chain_from(
    mut state: ChainState,
    variant: AlgorithmVariant,
    data: &MnpData,
    prior: &PriorSpec,
    config: &SamplerConfig,
    rng: &mut RngStream,
) -> Result<ChainOutput> {
    config.validate()?;
    check_compatible(variant, data, prior)?;
    state
        .check_invariants(data, variant.identification())
        .map_err(|e| MnpError::Argument(format!("invalid starting state: {e}")))?;
    if let Some(&bad) = config.latent_indices.iter().find(|&&i| i >= data.n()) {
        return Err(MnpError::Argument(format!(
            "latent index {bad} out of range for {} observations",
            data.n()
        )));
    }

    let keep = config.retained();
    let mut out = ChainOutput {
        variant,
        identification: variant.identification(),
        iterations: Vec::with_capacity(keep),
        betas: Vec::with_capacity(keep),
        sigmas: Vec::with_capacity(keep),
        alphas: Vec::with_capacity(keep),
        rejections: Vec::with_capacity(keep),
        violations: Vec::with_capacity(keep),
        latent_traces: config
            .latent_indices
            .iter()
            .map(|&index| LatentTrace {
                index,
                draws: Vec::with_capacity(keep),
            })
            .collect(),
        total_iterations: 0,
        total_rejections: 0,
        total_violations: 0,
        wall_clock_seconds: 0.0,
    };

    let start = Instant::now();
    for t in 1..=config.iterations {
        let info = transition(&mut state, variant, data, prior, config.max_rejections, rng).map_err(|e| match e {
            MnpError::StuckChain { max_rejections, .. } => MnpError::StuckChain {
                iteration: t,
                max_rejections,
                mean_rejections: if t > 1 {
                    out.total_rejections as f64 / (t - 1) as f64
                } else {
                    0.0
                },
            },
            other => other.at_iteration(t),
        })?;
        out.total_iterations += 1;
        out.total_rejections += info.rejections;
        out.total_violations += info.violated as usize;
        if config.keeps(t) {
            out.iterations.push(t);
            out.betas.push(state.beta.clone());
            out.sigmas.push(state.sigma.clone());
            out.alphas.push(state.alpha);
            out.rejections.push(info.rejections);
            out.violations.push(info.violated);
            for trace in &mut out.latent_traces {
                trace.draws.push(state.latent.row(trace.index).transpose());
            }
        }
    }
    out.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Runs `chains` independent chains on substreams `0..chains` of `config.seed`,
/// spreading them over at most `threads` worker threads.
pub fn run_chains(
    variant: AlgorithmVariant,
    data: &MnpData,
    prior: &PriorSpec,
    config: &SamplerConfig,
    chains: usize,
    threads: usize,
) -> Result<Vec<ChainOutput>> {
    run_chains_from(&init_state(data, prior), variant, data, prior, config, chains, threads)
}

/// As [`run_chains`], with every chain starting from `initial`.
pub fn run_chains_from(
    initial: &ChainState,
    variant: AlgorithmVariant,
    data: &MnpData,
    prior: &PriorSpec,
    config: &SamplerConfig,
    chains: usize,
    threads: usize,
) -> Result<Vec<ChainOutput>> {
    let threads = threads.clamp(1, chains.max(1));
    let mut results: Vec<Option<Result<ChainOutput>>> = (0..chains).map(|_| None).collect();
    for batch_start in (0..chains).step_by(threads) {
        let batch_end = (batch_start + threads).min(chains);
        let batch: Vec<Result<ChainOutput>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (batch_start..batch_end)
                .map(|c| {
                    scope.spawn(move || {
                        let mut rng = RngStream::substream(config.seed, c as u64);
                        run_chain_from(initial.clone(), variant, data, prior, config, &mut rng)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(MnpError::Numeric("chain thread panicked".into())))
                })
                .collect()
        });
        for (offset, r) in batch.into_iter().enumerate() {
            results[batch_start + offset] = Some(r);
        }
    }
    results.into_iter().map(|r| r.expect("every chain ran")).collect()
}
