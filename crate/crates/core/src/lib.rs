//! Bayesian network meta-analysis with time-varying treatment effects.

pub mod cli;
pub(crate) mod density;
pub mod kernels;
pub mod model;
pub mod network;
pub mod posterior;
pub mod sampler;
pub mod simgen;
