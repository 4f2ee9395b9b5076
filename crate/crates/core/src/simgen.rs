//! Synthetic outcomes on an existing network with a known time-varying
//! effect for one treatment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::logistic;
use crate::network::{Dataset, TreatmentId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("target treatment {0:?} is not in the skeleton")]
    UnknownTarget(String),
    #[error("target treatment {0:?} is the baseline")]
    TargetIsBaseline(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// True effect of the target treatment over normalized time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Constant {
        c: f64,
    },
    /// `a + b·(t − t0)²`
    Quadratic {
        a: f64,
        b: f64,
        t0: f64,
    },
    /// `a + h / (1 + exp(−r·(t − t_mid)))`
    Sigmoid {
        a: f64,
        h: f64,
        r: f64,
        t_mid: f64,
    },
}

impl Shape {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Shape::Constant { c } => c,
            Shape::Quadratic { a, b, t0 } => a + b * (t - t0) * (t - t0),
            Shape::Sigmoid { a, h, r, t_mid } => {
                if h == 0.0 {
                    a
                } else {
                    a + h * logistic(r * (t - t_mid))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Shape::Constant { .. } => "constant",
            Shape::Quadratic { .. } => "quadratic",
            Shape::Sigmoid { .. } => "sigmoid",
        }
    }

    fn params(&self) -> Vec<f64> {
        match *self {
            Shape::Constant { c } => vec![c],
            Shape::Quadratic { a, b, t0 } => vec![a, b, t0],
            Shape::Sigmoid { a, h, r, t_mid } => vec![a, h, r, t_mid],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub shape: Shape,
    /// Label of the treatment carrying the time-varying effect.
    pub target: String,
    /// Variance of the true constant effects of the other treatments.
    pub other_effect_var: f64,
    /// True contrast variance σ².
    pub sigma2: f64,
    /// True study-effect distribution N(m_mu, sigma2_mu).
    pub m_mu: f64,
    pub sigma2_mu: f64,
    /// Per-arm sample size; None keeps the skeleton's sizes.
    pub arm_size: Option<u64>,
    pub seed: u64,
}

impl Scenario {
    pub fn new(shape: Shape, target: impl Into<String>, seed: u64) -> Self {
        Scenario {
            shape,
            target: target.into(),
            other_effect_var: 0.25,
            sigma2: 0.04,
            m_mu: 1.0,
            sigma2_mu: 0.25,
            arm_size: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidScenario(m.to_string()));
        if self.shape.params().iter().any(|v| !v.is_finite()) {
            return bad("shape parameters must be finite");
        }
        if self.arm_size.is_some_and(|n| n < 10) {
            return bad("arm size must be at least 10");
        }
        if !(self.sigma2 >= 0.0 && self.sigma2_mu >= 0.0 && self.other_effect_var >= 0.0) {
            return bad("variances must be nonnegative");
        }
        if !self.m_mu.is_finite() {
            return bad("m_mu must be finite");
        }
        Ok(())
    }
}

/// Constant, quadratic and sigmoidal scenarios for `target`.
pub fn default_scenarios(target: &str, seed: u64) -> Vec<Scenario> {
    [
        Shape::Constant { c: 0.4 },
        Shape::Quadratic {
            a: 0.0,
            b: 1.6,
            t0: 0.5,
        },
        Shape::Sigmoid {
            a: -0.4,
            h: 1.2,
            r: 12.0,
            t_mid: 0.5,
        },
    ]
    .into_iter()
    .enumerate()
    .map(|(i, shape)| Scenario::new(shape, target, seed.wrapping_add(i as u64)))
    .collect()
}

/// True parameters behind a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub target: TreatmentId,
    pub baseline: TreatmentId,
    pub shape: Shape,
    /// Constant effects against the baseline; the target's entry is unused.
    pub effects: Vec<f64>,
    pub mu: Vec<f64>,
    pub delta: Vec<Vec<f64>>,
    /// Consistency means the contrasts were drawn around.
    pub means: Vec<Vec<f64>>,
}

impl GroundTruth {
    /// True `d_1k` at normalized time `t`.
    pub fn effect(&self, k: TreatmentId, t: f64) -> f64 {
        if k == self.baseline {
            0.0
        } else if k == self.target {
            self.shape.eval(t)
        } else {
            self.effects[k.0]
        }
    }

    pub fn consistency_mean(&self, data: &Dataset, study: usize, k: TreatmentId) -> f64 {
        let s = &data.studies()[study];
        self.effect(k, s.time) - self.effect(s.baseline(), s.time)
    }
}

/// Draws μ, δ and binomial outcomes on `skeleton`'s studies, arms and
/// times. Deterministic given the scenario seed.
pub fn generate(
    skeleton: &Dataset,
    scenario: &Scenario,
) -> Result<(Dataset, GroundTruth), SimError> {
    scenario.validate()?;
    let target = skeleton
        .treatment_by_label(&scenario.target)
        .ok_or_else(|| SimError::UnknownTarget(scenario.target.clone()))?;
    if target == skeleton.baseline() {
        return Err(SimError::TargetIsBaseline(scenario.target.clone()));
    }
    let base = match scenario.arm_size {
        Some(n) => skeleton.with_arm_size(n),
        None => skeleton.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let other = Normal::new(0.0, scenario.other_effect_var.sqrt()).expect("finite sd");
    let effects: Vec<f64> = (0..base.n_treatments())
        .map(|k| {
            let v = other.sample(&mut rng);
            if k == base.baseline().0 || k == target.0 {
                0.0
            } else {
                v
            }
        })
        .collect();
    let mut truth = GroundTruth {
        target,
        baseline: base.baseline(),
        shape: scenario.shape,
        effects,
        mu: Vec::with_capacity(base.n_studies()),
        delta: Vec::with_capacity(base.n_studies()),
        means: Vec::with_capacity(base.n_studies()),
    };
    let mu_dist = Normal::new(scenario.m_mu, scenario.sigma2_mu.sqrt()).expect("finite sd");
    let mut events = Vec::with_capacity(base.n_studies());
    for s in base.studies() {
        let mu = mu_dist.sample(&mut rng);
        let means: Vec<f64> = s
            .contrast_arms()
            .map(|a| truth.consistency_mean(&base, s.id, s.arms[a].treatment))
            .collect();
        let mut delta = Vec::with_capacity(means.len());
        let mut deviation = 0.0;
        for (j0, &m) in means.iter().enumerate() {
            let j = (j0 + 1) as f64;
            let sd = (scenario.sigma2 * (j + 1.0) / (2.0 * j)).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            let d = m + deviation / j + sd * z;
            deviation += d - m;
            delta.push(d);
        }
        let mut ys = Vec::with_capacity(s.arms.len());
        let mut j = 0;
        for (a, arm) in s.arms.iter().enumerate() {
            let eta = if a == s.baseline_arm {
                mu
            } else {
                j += 1;
                mu + delta[j - 1]
            };
            let y = Binomial::new(arm.size, logistic(eta))
                .expect("probability in [0, 1]")
                .sample(&mut rng);
            ys.push(y);
        }
        events.push(ys);
        truth.mu.push(mu);
        truth.delta.push(delta);
        truth.means.push(means);
    }
    Ok((base.with_events(&events), truth))
}
