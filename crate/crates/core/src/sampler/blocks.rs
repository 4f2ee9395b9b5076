//! Building blocks shared by every chain kernel: adaptive proposal scales,
//! the Metropolis accept step and the kernel trait driven by the runner.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SamplerError;

/// Random-walk scale tuned in batches toward a target acceptance rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveScale {
    log_scale: f64,
    target: f64,
    batch_accepted: u32,
    batch_proposed: u32,
    batches: u32,
    accepted: u64,
    proposed: u64,
    frozen: bool,
}

impl AdaptiveScale {
    pub fn new(scale: f64, target: f64) -> Self {
        AdaptiveScale {
            log_scale: scale.ln(),
            target,
            batch_accepted: 0,
            batch_proposed: 0,
            batches: 0,
            accepted: 0,
            proposed: 0,
            frozen: false,
        }
    }

    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn record(&mut self, accepted: bool) {
        self.batch_proposed += 1;
        self.proposed += 1;
        if accepted {
            self.batch_accepted += 1;
            self.accepted += 1;
        }
    }

    /// Closes a batch and nudges the scale unless frozen. The gain shrinks
    /// as `1/√batches`.
    pub fn end_batch(&mut self) {
        if !self.frozen && self.batch_proposed > 0 {
            self.batches += 1;
            let rate = self.batch_accepted as f64 / self.batch_proposed as f64;
            let gain = (3.0 / (self.batches as f64).sqrt()).min(1.0);
            self.log_scale += gain * (rate - self.target);
        }
        self.batch_accepted = 0;
        self.batch_proposed = 0;
    }

    /// Stops adaptation and clears the acceptance counters.
    pub fn freeze(&mut self) {
        self.frozen = true;
        self.accepted = 0;
        self.proposed = 0;
        self.batch_accepted = 0;
        self.batch_proposed = 0;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.accepted, self.proposed)
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Named collection of adaptive scales owned by one chain. Several scales
/// may share a name; their counts are pooled when reported.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tuners {
    names: Vec<String>,
    scales: Vec<AdaptiveScale>,
}

impl Tuners {
    pub fn new() -> Self {
        Tuners::default()
    }

    /// Adds a scale and returns its handle.
    pub fn add(&mut self, name: impl Into<String>, scale: f64, target: f64) -> usize {
        self.names.push(name.into());
        self.scales.push(AdaptiveScale::new(scale, target));
        self.scales.len() - 1
    }

    pub fn get(&self, handle: usize) -> &AdaptiveScale {
        &self.scales[handle]
    }

    pub fn get_mut(&mut self, handle: usize) -> &mut AdaptiveScale {
        &mut self.scales[handle]
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    pub fn end_batch(&mut self) {
        self.scales.iter_mut().for_each(AdaptiveScale::end_batch);
    }

    pub fn freeze(&mut self) {
        self.scales.iter_mut().for_each(AdaptiveScale::freeze);
    }

    pub fn snapshot(&self) -> Vec<f64> {
        self.scales.iter().map(AdaptiveScale::scale).collect()
    }

    /// Accepted and proposed counts pooled by name, in first-seen order.
    pub fn pooled(&self) -> Vec<(String, u64, u64)> {
        let mut out: Vec<(String, u64, u64)> = Vec::new();
        for (name, s) in self.names.iter().zip(&self.scales) {
            let (a, p) = s.counts();
            match out.iter_mut().find(|(n, _, _)| n == name) {
                Some(entry) => {
                    entry.1 += a;
                    entry.2 += p;
                }
                None => out.push((name.clone(), a, p)),
            }
        }
        out
    }
}

/// Metropolis accept step; NaN ratios are rejected.
pub fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio.is_nan() {
        return false;
    }
    rng.random::<f64>().ln() < log_ratio
}

/// Scalar random-walk Metropolis update of `x` under `log_target`, where
/// `current` is the log target at `x`. Returns the log target at the new
/// value.
pub fn rw_scalar<F: FnMut(f64) -> f64>(
    x: &mut f64,
    current: f64,
    tuner: &mut AdaptiveScale,
    rng: &mut ChaCha8Rng,
    mut log_target: F,
) -> f64 {
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    let proposal = *x + tuner.scale() * z;
    let value = log_target(proposal);
    let ok = accept(value - current, rng);
    tuner.record(ok);
    if ok {
        *x = proposal;
        value
    } else {
        current
    }
}

/// A Markov transition kernel the runner can drive.
pub trait ChainKernel: Sync {
    type State: Clone + Send;

    /// Starting state and the chain's proposal scales. Called with the
    /// chain's own generator.
    fn init(&self, rng: &mut ChaCha8Rng) -> Result<(Self::State, Tuners), SamplerError>;

    /// One full sweep over every parameter block.
    fn step(&self, state: &mut Self::State, tuners: &mut Tuners, rng: &mut ChaCha8Rng);
}
