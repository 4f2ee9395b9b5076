//! Conjugate normal-means model driven through the same block machinery as
//! the network kernel. Its posterior is known in closed form, which makes it
//! a calibration target for the sampler.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::blocks::{rw_scalar, ChainKernel, Tuners};
use super::SamplerError;
use crate::density;

/// Independent groups `y_gj ~ N(θ_g, noise_var)` with `θ_g ~ N(prior_mean, prior_var)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMeans {
    pub groups: Vec<Vec<f64>>,
    pub noise_var: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
    pub target_acceptance: f64,
}

impl NormalMeans {
    pub fn new(groups: Vec<Vec<f64>>, noise_var: f64, prior_mean: f64, prior_var: f64) -> Self {
        NormalMeans {
            groups,
            noise_var,
            prior_mean,
            prior_var,
            target_acceptance: 0.44,
        }
    }

    /// Analytic posterior mean and variance of group `g`.
    pub fn posterior(&self, g: usize) -> (f64, f64) {
        let y = &self.groups[g];
        let prec = 1.0 / self.prior_var + y.len() as f64 / self.noise_var;
        let mean =
            (self.prior_mean / self.prior_var + y.iter().sum::<f64>() / self.noise_var) / prec;
        (mean, 1.0 / prec)
    }

    pub fn log_target(&self, g: usize, theta: f64) -> f64 {
        density::normal(theta, self.prior_mean, self.prior_var)
            + self.groups[g]
                .iter()
                .map(|&y| density::normal(y, theta, self.noise_var))
                .sum::<f64>()
    }
}

impl ChainKernel for NormalMeans {
    type State = Vec<f64>;

    fn init(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Tuners), SamplerError> {
        let sd = self.prior_var.sqrt().min(10.0);
        let state = (0..self.groups.len())
            .map(|_| self.prior_mean + sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut tuners = Tuners::new();
        for _ in &self.groups {
            tuners.add("theta", 1.0, self.target_acceptance);
        }
        Ok((state, tuners))
    }

    fn step(&self, state: &mut Vec<f64>, tuners: &mut Tuners, rng: &mut ChaCha8Rng) {
        for (g, x) in state.iter_mut().enumerate() {
            let cur = self.log_target(g, *x);
            rw_scalar(x, cur, tuners.get_mut(g), rng, |v| self.log_target(g, v));
        }
    }
}
