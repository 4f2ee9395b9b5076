//! Multi-chain Metropolis-within-Gibbs sampling and convergence diagnostics.

mod blocks;
pub mod diagnostics;
mod nma;
pub mod toy;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ModelSpec, ParamState};
use crate::network::{Dataset, TreatmentId};

pub use blocks::{accept, rw_scalar, AdaptiveScale, ChainKernel, Tuners};
pub use diagnostics::DiagnosticError;
pub use nma::NmaKernel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("no finite starting point after {attempts} attempts")]
    Initialization { attempts: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How the linear effect parameters (basic parameters, slopes and latent
/// series) and σ² are updated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectUpdate {
    /// Exact joint Gaussian draw of all effects, inverse-gamma draw of σ².
    #[default]
    Conjugate,
    /// Random-walk Metropolis: scalar steps for basic parameters, slopes and
    /// log σ²; joint steps per latent series shaped by its prior factor.
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Iterations per adaptation batch during burn-in.
    pub adapt_window: usize,
    pub target_scalar: f64,
    pub target_vector: f64,
    pub effect_update: EffectUpdate,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_chains: 4,
            n_iter: 20_000,
            burn_in: 10_000,
            thin: 10,
            seed: 1,
            adapt_window: 50,
            target_scalar: 0.44,
            target_vector: 0.23,
            effect_update: EffectUpdate::Conjugate,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::InvalidConfig(m.to_string()));
        if self.n_chains < 1 {
            return bad("n_chains must be at least 1");
        }
        if self.thin < 1 {
            return bad("thin must be at least 1");
        }
        if self.burn_in >= self.n_iter {
            return bad("burn_in must be smaller than n_iter");
        }
        if self.adapt_window < 1 {
            return bad("adapt_window must be at least 1");
        }
        for t in [self.target_scalar, self.target_vector] {
            if !(t > 0.0 && t < 1.0) {
                return bad("target acceptance rates must lie in (0, 1)");
            }
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn retained_per_chain(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }
}

/// Pooled acceptance of one named block over all chains after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockAcceptance {
    pub block: String,
    pub rate: f64,
    pub proposals: u64,
}

/// Proposal scales of one chain at the end of burn-in and at the end of
/// the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSnapshot {
    pub after_burn_in: Vec<f64>,
    pub at_end: Vec<f64>,
}

/// Convergence summary of one monitored scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarDiagnostic {
    pub name: String,
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub chain: usize,
    pub iteration: usize,
    pub n_iter: usize,
}

/// Retained draws of every chain plus run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples<S = ParamState> {
    pub chains: Vec<Vec<S>>,
    /// Base seed; chain `c` uses stream `c` of the generator keyed by it.
    pub seed: u64,
    pub config: SamplerConfig,
    pub acceptance: Vec<BlockAcceptance>,
    pub scales: Vec<ScaleSnapshot>,
    pub diagnostics: Vec<ScalarDiagnostic>,
}

impl<S> PosteriorSamples<S> {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn draws(&self) -> impl Iterator<Item = &S> {
        self.chains.iter().flatten()
    }

    pub fn trace<F: Fn(&S) -> f64>(&self, f: F) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.iter().map(&f).collect())
            .collect()
    }

    pub fn split_rhat<F: Fn(&S) -> f64>(&self, f: F) -> Result<f64, DiagnosticError> {
        diagnostics::split_rhat(&self.trace(f))
    }

    pub fn ess<F: Fn(&S) -> f64>(&self, f: F) -> Result<f64, DiagnosticError> {
        diagnostics::ess(&self.trace(f))
    }

    /// Monitored scalars with split R-hat at or above `threshold`, or
    /// degenerate.
    pub fn unconverged(&self, threshold: f64) -> Vec<&ScalarDiagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.degenerate || d.rhat.is_some_and(|r| r.is_nan() || r >= threshold))
            .collect()
    }
}

/// Generator for chain `chain` under `seed`.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

struct ChainOutput<S> {
    draws: Vec<S>,
    tuners: Tuners,
    scales: ScaleSnapshot,
}

fn run_chain<K: ChainKernel>(
    kernel: &K,
    config: &SamplerConfig,
    chain: usize,
    progress: Option<&(dyn Fn(Progress) + Sync)>,
) -> Result<ChainOutput<K::State>, SamplerError> {
    let mut rng = chain_rng(config.seed, chain);
    let (mut state, mut tuners) = kernel.init(&mut rng)?;
    let mut draws = Vec::with_capacity(config.retained_per_chain());
    let mut after_burn_in = tuners.snapshot();
    if config.burn_in == 0 {
        tuners.freeze();
    }
    for it in 0..config.n_iter {
        kernel.step(&mut state, &mut tuners, &mut rng);
        let done = it + 1;
        if done <= config.burn_in {
            if done % config.adapt_window == 0 {
                tuners.end_batch();
            }
            if done == config.burn_in {
                tuners.freeze();
                after_burn_in = tuners.snapshot();
            }
        } else if (done - config.burn_in).is_multiple_of(config.thin) {
            draws.push(state.clone());
        }
        if done % 1000 == 0 {
            if let Some(cb) = progress {
                cb(Progress {
                    chain,
                    iteration: done,
                    n_iter: config.n_iter,
                });
            }
        }
    }
    let at_end = tuners.snapshot();
    Ok(ChainOutput {
        draws,
        tuners,
        scales: ScaleSnapshot {
            after_burn_in,
            at_end,
        },
    })
}

/// Runs `config.n_chains` independent chains of `kernel` in parallel.
/// Output depends only on the kernel, the config and the seed.
pub fn run_kernel<K: ChainKernel>(
    kernel: &K,
    config: &SamplerConfig,
    progress: Option<&(dyn Fn(Progress) + Sync)>,
) -> Result<PosteriorSamples<K::State>, SamplerError> {
    config.validate()?;
    let outputs = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(kernel, config, c, progress))
        .collect::<Result<Vec<_>, _>>()?;

    let mut acceptance: Vec<BlockAcceptance> = Vec::new();
    for out in &outputs {
        for (name, a, p) in out.tuners.pooled() {
            match acceptance.iter_mut().find(|b| b.block == name) {
                Some(b) => {
                    b.rate += a as f64;
                    b.proposals += p;
                }
                None => acceptance.push(BlockAcceptance {
                    block: name,
                    rate: a as f64,
                    proposals: p,
                }),
            }
        }
    }
    for b in &mut acceptance {
        b.rate = if b.proposals > 0 {
            b.rate / b.proposals as f64
        } else {
            0.0
        };
    }
    let mut chains = Vec::with_capacity(outputs.len());
    let mut scales = Vec::with_capacity(outputs.len());
    for out in outputs {
        chains.push(out.draws);
        scales.push(out.scales);
    }
    Ok(PosteriorSamples {
        chains,
        seed: config.seed,
        config: config.clone(),
        acceptance,
        scales,
        diagnostics: Vec::new(),
    })
}

/// A scalar function of the state tracked by the convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitor {
    Effect(TreatmentId),
    Sigma2,
    Slope(TreatmentId),
    Psi(TreatmentId),
    SBias(TreatmentId),
    SLinear(TreatmentId),
    Phi(TreatmentId),
    Rho(TreatmentId),
}

impl Monitor {
    pub fn value(self, s: &ParamState) -> f64 {
        match self {
            Monitor::Effect(k) => s.d.get(k),
            Monitor::Sigma2 => s.sigma2,
            Monitor::Slope(k) => s.beta[k.0],
            Monitor::Psi(k) => s.kernel[k.0].psi,
            Monitor::SBias(k) => s.kernel[k.0].s_b,
            Monitor::SLinear(k) => s.kernel[k.0].s_l,
            Monitor::Phi(k) => s.kernel[k.0].phi,
            Monitor::Rho(k) => s.kernel[k.0].rho,
        }
    }

    pub fn name(self, data: &Dataset) -> String {
        let (what, k) = match self {
            Monitor::Sigma2 => return "sigma2".to_string(),
            Monitor::Effect(k) => ("d", k),
            Monitor::Slope(k) => ("beta", k),
            Monitor::Psi(k) => ("psi", k),
            Monitor::SBias(k) => ("s_b", k),
            Monitor::SLinear(k) => ("s_l", k),
            Monitor::Phi(k) => ("phi", k),
            Monitor::Rho(k) => ("rho", k),
        };
        format!("{what}[{}]", data.label(k))
    }
}

/// Every basic parameter, σ², and the slopes or kernel hyperparameters
/// the model carries.
pub fn monitors(spec: &ModelSpec) -> Vec<Monitor> {
    let mut out: Vec<Monitor> = (0..spec.n_treatments())
        .map(TreatmentId)
        .filter(|&k| k != spec.baseline())
        .map(Monitor::Effect)
        .collect();
    out.push(Monitor::Sigma2);
    for k in spec.time_varying() {
        if spec.has_slope(k) {
            out.push(Monitor::Slope(k));
        }
        if spec.has_latent(k) {
            out.extend([
                Monitor::Psi(k),
                Monitor::SBias(k),
                Monitor::SLinear(k),
                Monitor::Phi(k),
                Monitor::Rho(k),
            ]);
        }
    }
    out
}

fn diagnose(samples: &PosteriorSamples, spec: &ModelSpec, data: &Dataset) -> Vec<ScalarDiagnostic> {
    monitors(spec)
        .into_iter()
        .map(|m| {
            let trace = samples.trace(|s| m.value(s));
            let rhat = diagnostics::split_rhat(&trace);
            let ess = diagnostics::ess(&trace);
            ScalarDiagnostic {
                name: m.name(data),
                degenerate: rhat == Err(DiagnosticError::Degenerate)
                    || ess == Err(DiagnosticError::Degenerate),
                rhat: rhat.ok(),
                ess: ess.ok(),
            }
        })
        .collect()
}

pub fn run(
    data: &Dataset,
    spec: &ModelSpec,
    config: &SamplerConfig,
) -> Result<PosteriorSamples, SamplerError> {
    run_with_progress(data, spec, config, None)
}

/// As [`run`], calling `progress` every 1000 iterations of each chain.
pub fn run_with_progress(
    data: &Dataset,
    spec: &ModelSpec,
    config: &SamplerConfig,
    progress: Option<&(dyn Fn(Progress) + Sync)>,
) -> Result<PosteriorSamples, SamplerError> {
    let kernel = NmaKernel::new(data, spec, config)?;
    let mut samples = run_kernel(&kernel, config, progress)?;
    samples.diagnostics = diagnose(&samples, spec, data);
    Ok(samples)
}
