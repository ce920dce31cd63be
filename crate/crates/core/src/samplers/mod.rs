//! The seven marginal data augmentation samplers. They share one step
//! implementation and differ only in the flags of [`AlgorithmVariant`].

mod chain;
mod steps;
mod variant;

pub use chain::{run_chain, run_chain_from, run_chains, run_chains_from, ChainOutput, LatentTrace};
pub use steps::{
    coordinate_conditionals, step1_alpha_prior, step1_gibbs_w, step2_alpha_beta, step3_sigma, transition,
    AlphaBetaDraw, CoordinateConditional, Step3Draw, Step3Input, TransitionInfo,
};
pub use variant::{AlgorithmVariant, Family, SamplerConfig};
