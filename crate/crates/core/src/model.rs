//! Log-posterior of the three model variants.
//!
//! Arm outcomes are binomial with `logit(p_ik) = μ_i + δ_ik` (δ dropped for
//! the study baseline arm). Study contrasts δ are random effects around the
//! consistency means `d_{b_i,k} = d_1k − d_1b_i`, where
//!
//! - `Bnma`: `d_1k` is a constant basic parameter;
//! - `MetaBnma`: `d_1k + β_k·(t_i − t̄)` for time-varying k;
//! - `Tbnma`: a latent value `d_1k^{t_i}` drawn from a Gaussian process
//!   around `d_1k` for time-varying k.
//!
//! The effect of the global baseline treatment is pinned to zero.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density;
use crate::kernels::{build_covariance, mvn_logpdf, KernelParams};
use crate::network::{Dataset, Study, TreatmentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bnma,
    #[serde(rename = "meta")]
    MetaBnma,
    Tbnma,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Bnma, ModelKind::MetaBnma, ModelKind::Tbnma];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bnma => "bnma",
            ModelKind::MetaBnma => "meta",
            ModelKind::Tbnma => "tbnma",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bnma" => Ok(ModelKind::Bnma),
            "meta" | "meta-bnma" | "metabnma" => Ok(ModelKind::MetaBnma),
            "tbnma" => Ok(ModelKind::Tbnma),
            _ => Err(ModelError::UnknownModel(s.to_string())),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown model {0:?} (expected bnma, meta or tbnma)")]
    UnknownModel(String),
    #[error("the baseline treatment cannot be time-varying")]
    BaselineTimeVarying,
    #[error("model baseline {spec} differs from the dataset baseline {data}")]
    BaselineMismatch { spec: usize, data: usize },
    #[error("unknown treatment index {0}")]
    UnknownTreatment(usize),
    #[error("parameter state does not match the dataset: {0}")]
    Shape(String),
}

/// Prior constants. Normal and half-normal slots hold variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    /// Variance of the normal priors on `m_μ` and `m_d`.
    pub mean_var: f64,
    /// Scale variance of the half-normal priors on ψ, `s_b`, `s_l`.
    pub amplitude_var: f64,
    /// Inverse-gamma shape and scale for σ², σ_μ², σ_d² and φ².
    pub ig_shape: f64,
    pub ig_scale: f64,
    /// Gamma shape and rate for ρ.
    pub rho_shape: f64,
    pub rho_rate: f64,
    /// Variance of the normal prior on meta-regression slopes.
    pub slope_var: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Priors {
            mean_var: 10_000.0,
            amplitude_var: 10_000.0,
            ig_shape: 1.0,
            ig_scale: 1.0,
            rho_shape: 1.0,
            rho_rate: 1.0,
            slope_var: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    baseline: TreatmentId,
    time_varying: Vec<bool>,
    pub priors: Priors,
}

impl ModelSpec {
    /// Model on `data`'s global baseline with time-varying set `time_varying`.
    pub fn new(
        kind: ModelKind,
        data: &Dataset,
        time_varying: &[TreatmentId],
    ) -> Result<Self, ModelError> {
        let mut flags = vec![false; data.n_treatments()];
        for &k in time_varying {
            if k.0 >= flags.len() {
                return Err(ModelError::UnknownTreatment(k.0));
            }
            if k == data.baseline() {
                return Err(ModelError::BaselineTimeVarying);
            }
            flags[k.0] = true;
        }
        Ok(ModelSpec {
            kind,
            baseline: data.baseline(),
            time_varying: flags,
            priors: Priors::default(),
        })
    }

    pub fn with_priors(mut self, priors: Priors) -> Self {
        self.priors = priors;
        self
    }

    pub fn baseline(&self) -> TreatmentId {
        self.baseline
    }

    pub fn n_treatments(&self) -> usize {
        self.time_varying.len()
    }

    /// Membership in 𝒯₁.
    pub fn is_time_varying(&self, k: TreatmentId) -> bool {
        self.time_varying[k.0]
    }

    pub fn time_varying(&self) -> Vec<TreatmentId> {
        (0..self.time_varying.len())
            .filter(|&k| self.time_varying[k])
            .map(TreatmentId)
            .collect()
    }

    /// 𝒯₀, including the baseline.
    pub fn constant_set(&self) -> Vec<TreatmentId> {
        (0..self.time_varying.len())
            .filter(|&k| !self.time_varying[k])
            .map(TreatmentId)
            .collect()
    }

    /// Treatments carrying a latent GP series under this model.
    pub fn has_latent(&self, k: TreatmentId) -> bool {
        self.kind == ModelKind::Tbnma && self.time_varying[k.0]
    }

    /// Treatments carrying a meta-regression slope under this model.
    pub fn has_slope(&self, k: TreatmentId) -> bool {
        self.kind == ModelKind::MetaBnma && self.time_varying[k.0]
    }

    pub fn check_data(&self, data: &Dataset) -> Result<(), ModelError> {
        if data.n_treatments() != self.n_treatments() {
            return Err(ModelError::Shape(format!(
                "{} treatments in spec, {} in data",
                self.n_treatments(),
                data.n_treatments()
            )));
        }
        if data.baseline() != self.baseline {
            return Err(ModelError::BaselineMismatch {
                spec: self.baseline.0,
                data: data.baseline().0,
            });
        }
        Ok(())
    }
}

/// Index of a basic parameter that is free to move. There is no way to
/// obtain one for the baseline treatment, so its effect stays pinned at 0.
///
/// ```compile_fail
/// use tbnma::model::FreeTreatment;
/// let _ = FreeTreatment(tbnma::network::TreatmentId(0));
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreeTreatment(TreatmentId);

impl FreeTreatment {
    pub fn id(self) -> TreatmentId {
        self.0
    }
}

/// Basic parameters `d_1k`, with `d_1,baseline ≡ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicEffects {
    baseline: TreatmentId,
    values: Vec<f64>,
}

impl BasicEffects {
    pub fn zeros(n_treatments: usize, baseline: TreatmentId) -> Self {
        BasicEffects {
            baseline,
            values: vec![0.0; n_treatments],
        }
    }

    pub fn baseline(&self) -> TreatmentId {
        self.baseline
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: TreatmentId) -> f64 {
        self.values[k.0]
    }

    pub fn slot(&self, k: TreatmentId) -> Option<FreeTreatment> {
        (k != self.baseline && k.0 < self.values.len()).then_some(FreeTreatment(k))
    }

    pub fn free(&self) -> impl Iterator<Item = FreeTreatment> + '_ {
        (0..self.values.len())
            .map(TreatmentId)
            .filter(move |&k| k != self.baseline)
            .map(FreeTreatment)
    }

    pub fn set(&mut self, k: FreeTreatment, value: f64) {
        self.values[k.0 .0] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// One point in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    /// Study effects μ_i.
    pub mu: Vec<f64>,
    /// Per-study contrasts, one per non-baseline arm in arm order.
    pub delta: Vec<Vec<f64>>,
    pub d: BasicEffects,
    /// Latent series per treatment over `Dataset::studies_with(k)`; empty
    /// for treatments without one.
    pub latent: Vec<Vec<f64>>,
    /// Meta-regression slope per treatment; unused entries stay 0.
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub m_mu: f64,
    pub sigma2_mu: f64,
    pub m_d: f64,
    pub sigma2_d: f64,
    /// GP hyperparameters per treatment; used only where a latent exists.
    pub kernel: Vec<KernelParams>,
}

impl ParamState {
    /// Starting point inside the prior bulk: μ_i and δ from empirical
    /// (half-corrected) logits, basic parameters at 0, variances at 1,
    /// kernel amplitudes at 0.1 and ρ at 1.
    pub fn initial(data: &Dataset, spec: &ModelSpec) -> Self {
        let logit = |y: u64, n: u64| ((y as f64 + 0.5) / (n as f64 - y as f64 + 0.5)).ln();
        let mut mu = Vec::with_capacity(data.n_studies());
        let mut delta = Vec::with_capacity(data.n_studies());
        for s in data.studies() {
            let b = &s.arms[s.baseline_arm];
            let base = logit(b.successes, b.size);
            mu.push(base);
            delta.push(
                s.contrast_arms()
                    .map(|a| logit(s.arms[a].successes, s.arms[a].size) - base)
                    .collect(),
            );
        }
        let k = data.n_treatments();
        let latent = (0..k)
            .map(|j| {
                let id = TreatmentId(j);
                if spec.has_latent(id) {
                    vec![0.0; data.studies_with(id).len()]
                } else {
                    Vec::new()
                }
            })
            .collect();
        ParamState {
            mu,
            delta,
            d: BasicEffects::zeros(k, spec.baseline()),
            latent,
            beta: vec![0.0; k],
            sigma2: 1.0,
            m_mu: 0.0,
            sigma2_mu: 1.0,
            m_d: 0.0,
            sigma2_d: 1.0,
            kernel: vec![KernelParams::default(); k],
        }
    }

    pub fn check_shape(&self, data: &Dataset, spec: &ModelSpec) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::Shape(what.to_string()));
        if self.mu.len() != data.n_studies() || self.delta.len() != data.n_studies() {
            return bad("study count");
        }
        for (s, d) in data.studies().iter().zip(&self.delta) {
            if d.len() != s.n_contrasts() {
                return bad("contrast count");
            }
        }
        let k = data.n_treatments();
        if self.d.len() != k
            || self.beta.len() != k
            || self.kernel.len() != k
            || self.latent.len() != k
        {
            return bad("treatment count");
        }
        if self.d.baseline() != spec.baseline() {
            return bad("pinned treatment differs from the model baseline");
        }
        for j in 0..k {
            let id = TreatmentId(j);
            let want = if spec.has_latent(id) {
                data.studies_with(id).len()
            } else {
                0
            };
            if self.latent[j].len() != want {
                return bad("latent series length");
            }
        }
        Ok(())
    }
}

/// Success probability of an arm. The contrast is ignored on the study
/// baseline arm.
pub fn logit_prob(mu: f64, delta: f64, baseline_arm: bool) -> f64 {
    let eta = if baseline_arm { mu } else { mu + delta };
    density::logistic(eta)
}

/// `log Bin(y; n, logistic(eta))` including the binomial coefficient.
pub fn arm_log_pmf(y: u64, n: u64, eta: f64) -> f64 {
    // ln p = -softplus(-eta), ln(1-p) = -softplus(eta)
    density::ln_binomial(n, y)
        - y as f64 * density::softplus(-eta)
        - (n - y) as f64 * density::softplus(eta)
}

pub fn study_log_likelihood(study: &Study, mu: f64, delta: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut j = 0;
    for (a, arm) in study.arms.iter().enumerate() {
        let eta = if a == study.baseline_arm {
            mu
        } else {
            j += 1;
            mu + delta[j - 1]
        };
        total += arm_log_pmf(arm.successes, arm.size, eta);
    }
    total
}

pub fn log_likelihood(data: &Dataset, state: &ParamState) -> f64 {
    data.studies()
        .iter()
        .map(|s| study_log_likelihood(s, state.mu[s.id], &state.delta[s.id]))
        .sum()
}

/// Effect of `k` relative to the global baseline at the time of `study`.
pub fn study_effect(
    state: &ParamState,
    spec: &ModelSpec,
    data: &Dataset,
    k: TreatmentId,
    study: &Study,
) -> f64 {
    if k == spec.baseline() {
        return 0.0;
    }
    if spec.has_latent(k) {
        let slot = data
            .occurrence_slot(k, study.id)
            .expect("treatment is an arm of the study");
        return state.latent[k.0][slot];
    }
    let base = state.d.get(k);
    if spec.has_slope(k) {
        base + state.beta[k.0] * (study.time - data.mean_time())
    } else {
        base
    }
}

/// Consistency mean `d_{b_i,k}` of the contrast of `k` against the study
/// baseline. Both effects are evaluated at the study's time.
pub fn consistency_mean(
    state: &ParamState,
    spec: &ModelSpec,
    data: &Dataset,
    study: &Study,
    k: TreatmentId,
) -> f64 {
    let b = study.baseline();
    if k == b {
        return 0.0;
    }
    study_effect(state, spec, data, k, study) - study_effect(state, spec, data, b, study)
}

/// Consistency means of every contrast in `study`, in contrast order.
pub fn contrast_means(
    state: &ParamState,
    spec: &ModelSpec,
    data: &Dataset,
    study: &Study,
) -> Vec<f64> {
    let base = study_effect(state, spec, data, study.baseline(), study);
    study
        .contrast_arms()
        .map(|a| study_effect(state, spec, data, study.arms[a].treatment, study) - base)
        .collect()
}

/// Multi-arm contrast prior as a product of conditionals: the j-th contrast
/// (1-based) is normal with mean `m_j + (1/j)·Σ_{l<j}(δ_l − m_l)` and
/// variance `σ²·(j+1)/(2j)`. Equals the joint normal with variance σ² and
/// covariance σ²/2.
pub fn contrast_logprior(deltas: &[f64], means: &[f64], sigma2: f64) -> f64 {
    let mut total = 0.0;
    let mut deviation = 0.0;
    for (j0, (&d, &m)) in deltas.iter().zip(means).enumerate() {
        let j = (j0 + 1) as f64;
        let cond_mean = m + deviation / j;
        let var = sigma2 * (j + 1.0) / (2.0 * j);
        total += density::normal(d, cond_mean, var);
        deviation += d - m;
    }
    total
}

pub fn delta_logprior(state: &ParamState, spec: &ModelSpec, data: &Dataset, study: &Study) -> f64 {
    let means = contrast_means(state, spec, data, study);
    contrast_logprior(&state.delta[study.id], &means, state.sigma2)
}

/// A parameter outside its prior support.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportViolation {
    pub parameter: String,
    pub value: f64,
}

pub fn support_violation(state: &ParamState, spec: &ModelSpec) -> Option<SupportViolation> {
    let check = |name: &str, v: f64, strict: bool| {
        let ok = v.is_finite() && if strict { v > 0.0 } else { v >= 0.0 };
        (!ok).then(|| SupportViolation {
            parameter: name.to_string(),
            value: v,
        })
    };
    check("sigma2", state.sigma2, true)
        .or_else(|| check("sigma2_mu", state.sigma2_mu, true))
        .or_else(|| check("sigma2_d", state.sigma2_d, true))
        .or_else(|| {
            spec.time_varying()
                .into_iter()
                .filter(|&k| spec.has_latent(k))
                .find_map(|k| {
                    let p = &state.kernel[k.0];
                    check(&format!("psi[{}]", k.0), p.psi, false)
                        .or_else(|| check(&format!("s_b[{}]", k.0), p.s_b, false))
                        .or_else(|| check(&format!("s_l[{}]", k.0), p.s_l, false))
                        .or_else(|| check(&format!("phi[{}]", k.0), p.phi, true))
                        .or_else(|| check(&format!("rho[{}]", k.0), p.rho, true))
                })
        })
}

/// GP log-density of the latent series of `k` around its basic parameter.
pub fn latent_logprior(state: &ParamState, data: &Dataset, k: TreatmentId) -> f64 {
    let times = data.times_of(k);
    let Ok(cov) = build_covariance(&state.kernel[k.0], &times) else {
        return f64::NEG_INFINITY;
    };
    let x = DVector::from_column_slice(&state.latent[k.0]);
    let mean = DVector::from_element(times.len(), state.d.get(k));
    mvn_logpdf(&x, &mean, &cov).unwrap_or(f64::NEG_INFINITY)
}

/// Hyperprior of one treatment's kernel parameters. IG applies to φ².
pub fn kernel_logprior(p: &KernelParams, priors: &Priors) -> f64 {
    density::half_normal(p.psi, priors.amplitude_var)
        + density::half_normal(p.s_b, priors.amplitude_var)
        + density::half_normal(p.s_l, priors.amplitude_var)
        + density::inv_gamma(p.phi * p.phi, priors.ig_shape, priors.ig_scale)
        + density::gamma(p.rho, priors.rho_shape, priors.rho_rate)
}

pub fn log_prior(state: &ParamState, spec: &ModelSpec, data: &Dataset) -> f64 {
    if support_violation(state, spec).is_some() {
        return f64::NEG_INFINITY;
    }
    let pr = &spec.priors;
    let mut total: f64 = state
        .mu
        .iter()
        .map(|&m| density::normal(m, state.m_mu, state.sigma2_mu))
        .sum();
    total += state
        .d
        .free()
        .map(|k| density::normal(state.d.get(k.id()), state.m_d, state.sigma2_d))
        .sum::<f64>();
    total += density::normal(state.m_mu, 0.0, pr.mean_var)
        + density::normal(state.m_d, 0.0, pr.mean_var);
    for v in [state.sigma2, state.sigma2_mu, state.sigma2_d] {
        total += density::inv_gamma(v, pr.ig_shape, pr.ig_scale);
    }
    for k in spec.time_varying() {
        if spec.has_latent(k) {
            total += latent_logprior(state, data, k) + kernel_logprior(&state.kernel[k.0], pr);
        }
        if spec.has_slope(k) {
            total += density::normal(state.beta[k.0], 0.0, pr.slope_var);
        }
    }
    total
}

/// Full unnormalized log-posterior: likelihood, contrast priors and priors.
pub fn log_posterior(data: &Dataset, state: &ParamState, spec: &ModelSpec) -> f64 {
    let prior = log_prior(state, spec, data);
    if prior == f64::NEG_INFINITY {
        return prior;
    }
    let contrasts: f64 = data
        .studies()
        .iter()
        .map(|s| delta_logprior(state, spec, data, s))
        .sum();
    log_likelihood(data, state) + contrasts + prior
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_dataset, impute_date, RawRecord};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(study: &str, date: &str, t: &str, y: u64, n: u64) -> RawRecord {
        RawRecord {
            study: study.into(),
            date: impute_date(date).unwrap(),
            treatment: t.into(),
            events: y,
            total: n,
        }
    }

    /// A: 3-arm, others 2-arm; X is the most common treatment.
    fn small() -> Dataset {
        build_dataset(&[
            rec("A", "2001-01", "X", 20, 40),
            rec("A", "2001-01", "Y", 25, 40),
            rec("A", "2001-01", "Z", 30, 40),
            rec("B", "2004-06", "Y", 12, 30),
            rec("B", "2004-06", "X", 15, 30),
            rec("C", "2008-03", "X", 40, 60),
            rec("C", "2008-03", "Z", 45, 60),
            rec("D", "2011-09", "Y", 18, 25),
            rec("D", "2011-09", "Z", 20, 25),
        ])
        .unwrap()
    }

    fn joint_oracle(deltas: &[f64], means: &[f64], sigma2: f64) -> f64 {
        let q = deltas.len();
        let cov = DMatrix::from_fn(q, q, |i, j| if i == j { sigma2 } else { sigma2 / 2.0 });
        let inv = cov.clone().try_inverse().unwrap();
        let r = DVector::from_fn(q, |i, _| deltas[i] - means[i]);
        -0.5 * q as f64 * (2.0 * std::f64::consts::PI).ln()
            - 0.5 * cov.determinant().ln()
            - 0.5 * (r.transpose() * inv * &r)[(0, 0)]
    }

    #[test]
    fn logit_prob_examples() {
        assert_eq!(logit_prob(0.0, 0.0, false), 0.5);
        assert_abs_diff_eq!(logit_prob(0.0, 3f64.ln(), false), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(logit_prob(3f64.ln(), 17.0, true), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn binomial_pmf_examples() {
        let v = arm_log_pmf(5, 10, 0.0);
        assert_abs_diff_eq!(v, 252f64.ln() - 10.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(v, -1.402_043, epsilon = 1e-6);
        let near = arm_log_pmf(10, 10, 10.0);
        let nearer = arm_log_pmf(10, 10, 20.0);
        assert!(near < nearer && nearer < 0.0 && nearer > -1e-7);
        let two = arm_log_pmf(3, 7, 0.2) + arm_log_pmf(1, 9, -1.0);
        let s = build_dataset(&[
            rec("A", "2001-01", "X", 3, 7),
            rec("A", "2001-01", "Y", 1, 9),
        ])
        .unwrap();
        assert_abs_diff_eq!(
            study_log_likelihood(&s.studies()[0], 0.2, &[-1.2]),
            two,
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_arm_contrast_prior_is_single_normal() {
        assert_abs_diff_eq!(
            contrast_logprior(&[0.3], &[0.1], 0.5),
            density::normal(0.3, 0.1, 0.5),
            epsilon = 1e-15
        );
        // at the means only the normalizing constants remain
        let at_mean = contrast_logprior(&[0.2, -0.4, 1.0], &[0.2, -0.4, 1.0], 0.7);
        let consts: f64 = (1..=3)
            .map(|j| {
                let var = 0.7 * (j as f64 + 1.0) / (2.0 * j as f64);
                -0.5 * (2.0 * std::f64::consts::PI * var).ln()
            })
            .sum();
        assert_abs_diff_eq!(at_mean, consts, epsilon = 1e-13);
    }

    #[test]
    fn conditional_product_matches_joint_mvn() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let q = rng.random_range(1..=3);
            let deltas: Vec<f64> = (0..q).map(|_| rng.random_range(-2.0..2.0)).collect();
            let means: Vec<f64> = (0..q).map(|_| rng.random_range(-2.0..2.0)).collect();
            let s2 = rng.random_range(0.05..3.0);
            assert_abs_diff_eq!(
                contrast_logprior(&deltas, &means, s2),
                joint_oracle(&deltas, &means, s2),
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn consistency_means() {
        let data = small();
        let x = data.treatment_by_label("X").unwrap();
        let y = data.treatment_by_label("Y").unwrap();
        let z = data.treatment_by_label("Z").unwrap();
        assert_eq!(data.baseline(), x);
        let spec = ModelSpec::new(ModelKind::Bnma, &data, &[]).unwrap();
        let mut st = ParamState::initial(&data, &spec);
        st.d.set(st.d.slot(y).unwrap(), 0.4);
        st.d.set(st.d.slot(z).unwrap(), 0.1);
        let d_study = &data.studies()[3]; // Y vs Z, baseline Y (Y and Z tie, Y first)
        assert_eq!(d_study.baseline(), y);
        assert_abs_diff_eq!(
            consistency_mean(&st, &spec, &data, d_study, z),
            0.1 - 0.4,
            epsilon = 1e-15
        );
        assert_eq!(consistency_mean(&st, &spec, &data, d_study, y), 0.0);

        // tBNMA, Z time-varying, study baseline Y constant
        let spec = ModelSpec::new(ModelKind::Tbnma, &data, &[z]).unwrap();
        let mut st = ParamState::initial(&data, &spec);
        st.d.set(st.d.slot(y).unwrap(), 0.4);
        st.latent[z.0] = vec![0.5, 0.6, 0.7];
        assert_abs_diff_eq!(
            consistency_mean(&st, &spec, &data, d_study, z),
            0.7 - 0.4,
            epsilon = 1e-15
        );

        // Meta-BNMA: slope about the mean time
        let spec = ModelSpec::new(ModelKind::MetaBnma, &data, &[z]).unwrap();
        let mut st = ParamState::initial(&data, &spec);
        st.d.set(st.d.slot(z).unwrap(), 0.2);
        st.beta[z.0] = 2.0;
        let c = &data.studies()[2];
        let want = 0.2 + 2.0 * (c.time - data.mean_time());
        assert_abs_diff_eq!(
            consistency_mean(&st, &spec, &data, c, z),
            want,
            epsilon = 1e-15
        );
    }

    #[test]
    fn baseline_cannot_vary_in_time() {
        let data = small();
        assert_eq!(
            ModelSpec::new(ModelKind::Tbnma, &data, &[data.baseline()]),
            Err(ModelError::BaselineTimeVarying)
        );
    }

    #[test]
    fn baseline_effect_is_pinned() {
        let data = small();
        let spec = ModelSpec::new(ModelKind::Bnma, &data, &[]).unwrap();
        let st = ParamState::initial(&data, &spec);
        assert!(st.d.slot(spec.baseline()).is_none());
        assert_eq!(st.d.free().count(), data.n_treatments() - 1);
        assert!(st.d.free().all(|k| k.id() != spec.baseline()));
        assert_eq!(st.d.get(spec.baseline()), 0.0);
    }

    #[test]
    fn support_violations_give_negative_infinity() {
        let data = small();
        let spec = ModelSpec::new(ModelKind::Bnma, &data, &[]).unwrap();
        let mut st = ParamState::initial(&data, &spec);
        st.sigma2 = 0.0;
        assert_eq!(log_prior(&st, &spec, &data), f64::NEG_INFINITY);
        assert_eq!(log_posterior(&data, &st, &spec), f64::NEG_INFINITY);
        assert_eq!(support_violation(&st, &spec).unwrap().parameter, "sigma2");

        let z = data.treatment_by_label("Z").unwrap();
        let spec = ModelSpec::new(ModelKind::Tbnma, &data, &[z]).unwrap();
        let mut st = ParamState::initial(&data, &spec);
        st.kernel[z.0].rho = -1.0;
        assert_eq!(log_posterior(&data, &st, &spec), f64::NEG_INFINITY);
    }

    #[test]
    fn bnma_prior_matches_term_by_term_sum() {
        let data = small();
        let spec = ModelSpec::new(ModelKind::Bnma, &data, &[]).unwrap();
        let mut st = ParamState::initial(&data, &spec);
        st.mu = vec![0.0; 4];
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        // 4 μ's and 2 free d's at N(0; 0, 1); m_μ, m_d at N(0; 0, 1e4);
        // three IG(1,1) at 1 each contribute -1.
        let oracle = 6.0 * (-0.5 * ln2pi) + 2.0 * (-0.5 * (ln2pi + 10_000f64.ln())) - 3.0;
        assert_abs_diff_eq!(log_prior(&st, &spec, &data), oracle, epsilon = 1e-12);
    }

    #[test]
    fn nested_models_agree() {
        let data = small();
        let bnma = ModelSpec::new(ModelKind::Bnma, &data, &[]).unwrap();
        let meta = ModelSpec::new(ModelKind::MetaBnma, &data, &[]).unwrap();
        let tbnma = ModelSpec::new(ModelKind::Tbnma, &data, &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut st = ParamState::initial(&data, &bnma);
            for m in &mut st.mu {
                *m = rng.random_range(-1.0..1.0);
            }
            for d in st.delta.iter_mut().flatten() {
                *d = rng.random_range(-1.0..1.0);
            }
            let free: Vec<_> = st.d.free().collect();
            for k in free {
                st.d.set(k, rng.random_range(-1.0..1.0));
            }
            st.sigma2 = rng.random_range(0.1..2.0);
            st.m_d = rng.random_range(-1.0..1.0);
            let a = log_posterior(&data, &st, &bnma);
            assert_eq!(log_prior(&st, &tbnma, &data), log_prior(&st, &bnma, &data));
            assert_eq!(log_posterior(&data, &st, &tbnma), a);
            assert_eq!(log_posterior(&data, &st, &meta), a);
        }
    }

    #[test]
    fn posterior_is_sum_of_components() {
        let data = small();
        let z = data.treatment_by_label("Z").unwrap();
        let spec = ModelSpec::new(ModelKind::Tbnma, &data, &[z]).unwrap();
        let mut st = ParamState::initial(&data, &spec);
        st.latent[z.0] = vec![0.3, 0.1, -0.2];
        st.kernel[z.0] = KernelParams {
            psi: 0.3,
            s_b: 0.2,
            s_l: 0.4,
            phi: 0.5,
            rho: 2.0,
        };
        // independent component evaluation
        let mut lik = 0.0;
        for s in data.studies() {
            for (a, arm) in s.arms.iter().enumerate() {
                let p = if a == s.baseline_arm {
                    logit_prob(st.mu[s.id], 0.0, true)
                } else {
                    let j = s.contrast_arms().position(|c| c == a).unwrap();
                    logit_prob(st.mu[s.id], st.delta[s.id][j], false)
                };
                lik += density::ln_binomial(arm.size, arm.successes)
                    + arm.successes as f64 * p.ln()
                    + (arm.size - arm.successes) as f64 * (1.0 - p).ln();
            }
        }
        let contrasts: f64 = data
            .studies()
            .iter()
            .map(|s| {
                let means: Vec<f64> = s
                    .contrast_arms()
                    .map(|a| consistency_mean(&st, &spec, &data, s, s.arms[a].treatment))
                    .collect();
                joint_oracle(&st.delta[s.id], &means, st.sigma2)
            })
            .sum();
        let total = lik + contrasts + log_prior(&st, &spec, &data);
        assert_abs_diff_eq!(log_posterior(&data, &st, &spec), total, epsilon = 1e-10);
    }

    #[test]
    fn shape_check() {
        let data = small();
        let z = data.treatment_by_label("Z").unwrap();
        let spec = ModelSpec::new(ModelKind::Tbnma, &data, &[z]).unwrap();
        let st = ParamState::initial(&data, &spec);
        assert!(st.check_shape(&data, &spec).is_ok());
        let mut bad = st.clone();
        bad.latent[z.0].pop();
        assert!(bad.check_shape(&data, &spec).is_err());
    }

    proptest::proptest! {
        #[test]
        fn contrast_prior_equals_joint_mvn(
            sigma2 in 0.01f64..5.0,
            pairs in proptest::collection::vec((-4.0f64..4.0, -3.0f64..3.0), 1..=3),
        ) {
            let (deltas, means): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let diff = contrast_logprior(&deltas, &means, sigma2) - joint_oracle(&deltas, &means, sigma2);
            proptest::prop_assert!(diff.abs() < 1e-8, "{}", diff);
        }

        #[test]
        fn likelihood_adds_over_arms_and_studies(
            mu in proptest::collection::vec(-3.0f64..3.0, 4),
            delta in proptest::collection::vec(-3.0f64..3.0, 5),
        ) {
            let data = small();
            let spec = ModelSpec::new(ModelKind::Bnma, &data, &[]).unwrap();
            let mut st = ParamState::initial(&data, &spec);
            st.mu.copy_from_slice(&mu);
            let mut it = delta.iter();
            for d in st.delta.iter_mut().flatten() {
                *d = *it.next().unwrap();
            }
            let mut by_arm = 0.0;
            for s in data.studies() {
                let mut j = 0;
                for (a, arm) in s.arms.iter().enumerate() {
                    let eta = if a == s.baseline_arm {
                        st.mu[s.id]
                    } else {
                        j += 1;
                        st.mu[s.id] + st.delta[s.id][j - 1]
                    };
                    by_arm += arm_log_pmf(arm.successes, arm.size, eta);
                }
            }
            let total = log_likelihood(&data, &st);
            proptest::prop_assert!((total - by_arm).abs() < 1e-9 * total.abs().max(1.0));
        }

        #[test]
        fn models_nest_without_time_varying_treatments(
            shift in -1.0f64..1.0,
            sigma2 in 0.1f64..2.0,
        ) {
            let data = small();
            let bnma = ModelSpec::new(ModelKind::Bnma, &data, &[]).unwrap();
            let mut st = ParamState::initial(&data, &bnma);
            let free: Vec<_> = st.d.free().collect();
            for (i, k) in free.into_iter().enumerate() {
                st.d.set(k, shift * (i + 1) as f64);
            }
            st.sigma2 = sigma2;
            let a = log_posterior(&data, &st, &bnma);
            for kind in [ModelKind::MetaBnma, ModelKind::Tbnma] {
                let spec = ModelSpec::new(kind, &data, &[]).unwrap();
                proptest::prop_assert_eq!(log_posterior(&data, &st, &spec), a);
            }
        }
    }
}
