//! Bayesian multinomial probit fitting by marginal data augmentation.
//!
//! The crate carries the original and the corrected versions of three
//! sampler families side by side, plus the diagnostics and simulation
//! harness needed to compare them.

#[cfg(feature = "cli")]
pub mod cli;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod samplers;

pub use error::{MnpError, Result};
pub use model::{ChainState, Identification, MnpData, PriorSpec};
pub use samplers::{AlgorithmVariant, ChainOutput, SamplerConfig};
