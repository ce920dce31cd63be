use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{MnpError, Result};
use crate::model::Identification;

/// Step ordering shared by a group of samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// alpha marginalized in every step, first-diagonal restriction.
    One,
    /// beta drawn last without marginalizing alpha.
    Two,
    /// Family One with the trace restriction.
    Three,
}

/// One of the seven samplers, described by the flags that separate them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlgorithmVariant {
    pub family: Family,
    /// Map back to identified latents with `(Z_i + alpha X_i beta) / alpha`
    /// instead of `W~_i / alpha`.
    pub corrected_transform: bool,
    /// Restrict the inverse-Wishart draw to scales that keep every latent
    /// consistent with its observed choice.
    pub constrained_sigma: bool,
    /// Rescale beta by the new working parameter at the end of the
    /// covariance step.
    pub rescale_beta_step3: bool,
}

impl AlgorithmVariant {
    pub const ALG_1_1: Self = Self::new(Family::One, false, false, false);
    pub const ALG_1_2: Self = Self::new(Family::One, true, false, false);
    pub const ALG_1_3: Self = Self::new(Family::One, true, true, false);
    pub const ALG_2_1: Self = Self::new(Family::Two, true, false, false);
    pub const ALG_2_2: Self = Self::new(Family::Two, true, true, false);
    pub const ALG_3_1: Self = Self::new(Family::Three, false, false, true);
    pub const ALG_3_2: Self = Self::new(Family::Three, true, true, false);

    pub const ALL: [Self; 7] = [
        Self::ALG_1_1,
        Self::ALG_1_2,
        Self::ALG_1_3,
        Self::ALG_2_1,
        Self::ALG_2_2,
        Self::ALG_3_1,
        Self::ALG_3_2,
    ];

    const fn new(family: Family, corrected_transform: bool, constrained_sigma: bool, rescale_beta_step3: bool) -> Self {
        AlgorithmVariant {
            family,
            corrected_transform,
            constrained_sigma,
            rescale_beta_step3,
        }
    }

    pub fn identification(&self) -> Identification {
        match self.family {
            Family::One | Family::Two => Identification::FirstDiagonal,
            Family::Three => Identification::Trace,
        }
    }

    /// Published label such as `"1.3"`, or `None` for flag combinations
    /// that do not correspond to a named sampler.
    pub fn label(&self) -> Option<&'static str> {
        const LABELS: [&str; 7] = ["1.1", "1.2", "1.3", "2.1", "2.2", "3.1", "3.2"];
        Self::ALL.iter().position(|v| v == self).map(|i| LABELS[i])
    }

    pub fn from_label(label: &str) -> Result<Self> {
        let trimmed = label.trim();
        let trimmed = trimmed
            .strip_prefix("alg")
            .or_else(|| trimmed.strip_prefix("Alg"))
            .unwrap_or(trimmed)
            .trim_start_matches(['_', '-', ' ']);
        Self::ALL
            .iter()
            .find(|v| v.label() == Some(trimmed))
            .copied()
            .ok_or_else(|| {
                MnpError::Argument(format!(
                    "unknown algorithm '{label}' (expected one of 1.1, 1.2, 1.3, 2.1, 2.2, 3.1, 3.2)"
                ))
            })
    }

    pub fn is_corrected(&self) -> bool {
        self.corrected_transform && self.constrained_sigma && !self.rescale_beta_step3
    }
}

impl fmt::Display for AlgorithmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.label() {
            Some(l) => write!(f, "{l}"),
            None => write!(f, "{self:?}"),
        }
    }
}

/// Chain length, retention and safety settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Cap on inverse-Wishart redraws within one constrained step.
    pub max_rejections: u64,
    /// 0-based observations whose latent draws are kept.
    #[serde(default)]
    pub latent_indices: Vec<usize>,
}

impl SamplerConfig {
    pub const DEFAULT_MAX_REJECTIONS: u64 = 1_000_000;

    pub fn new(iterations: usize, burn_in: usize, thin: usize, seed: u64) -> Result<Self> {
        let config = SamplerConfig {
            iterations,
            burn_in,
            thin,
            seed,
            max_rejections: Self::DEFAULT_MAX_REJECTIONS,
            latent_indices: Vec::new(),
        };
        config.validate()?;
        Ok(config)
    }

    /// 15,000 iterations with the first 5,000 discarded.
    pub fn simulation_protocol(seed: u64) -> Self {
        SamplerConfig::new(15_000, 5_000, 1, seed).expect("valid protocol")
    }

    /// 300,000 iterations, 100,000 discarded, every 10th kept.
    pub fn real_data_protocol(seed: u64) -> Self {
        SamplerConfig::new(300_000, 100_000, 10, seed).expect("valid protocol")
    }

    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(MnpError::Argument(format!(
                "burn-in {} must be smaller than the number of iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(MnpError::Argument("thin must be at least 1".into()));
        }
        if self.max_rejections == 0 {
            return Err(MnpError::Argument("max_rejections must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether 1-based iteration `t` is kept.
    pub fn keeps(&self, t: usize) -> bool {
        t > self.burn_in && (t - self.burn_in).is_multiple_of(self.thin)
    }
}
