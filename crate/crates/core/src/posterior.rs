//! Summaries of retained draws: effects at a time, effect curves, tail
//! probabilities and side-by-side model comparison.
//!
//! Effects are on the log-odds scale of success, so a positive `d_1k`
//! means treatment k is more effective than the baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{GpConditioner, KernelError};
use crate::model::{ModelKind, ModelSpec, ParamState};
use crate::network::{Dataset, TreatmentId};
use crate::sampler::PosteriorSamples;

/// Normalized end of the observed period.
pub const END_OF_PERIOD: f64 = 1.0;
pub const DEFAULT_GRID: usize = 101;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosteriorError {
    #[error("unknown treatment index {0}")]
    UnknownTreatment(usize),
    #[error("no retained draws")]
    NoDraws,
    #[error("grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("runs use different baselines")]
    MismatchedBaselines,
    #[error("prediction failed: {0}")]
    Kernel(#[from] KernelError),
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Central credible interval at `level`.
pub fn interval(sorted: &[f64], level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    (quantile(sorted, tail), quantile(sorted, 1.0 - tail))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub prob_negative: f64,
    pub prob_positive: f64,
}

impl Summary {
    pub fn from_draws(draws: &[f64]) -> Self {
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = if draws.len() > 1 {
            draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Summary {
            mean,
            sd: var.sqrt(),
            q025: quantile(&sorted, 0.025),
            q50: quantile(&sorted, 0.5),
            q975: quantile(&sorted, 0.975),
            prob_negative: draws.iter().filter(|&&x| x < 0.0).count() as f64 / n,
            prob_positive: draws.iter().filter(|&&x| x > 0.0).count() as f64 / n,
        }
    }

    pub fn width(&self) -> f64 {
        self.q975 - self.q025
    }

    pub fn covers(&self, value: f64) -> bool {
        self.q025 <= value && value <= self.q975
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCurve {
    pub treatment: TreatmentId,
    pub label: String,
    /// Normalized grid times.
    pub grid: Vec<f64>,
    /// Grid times in decimal years.
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub q025: Vec<f64>,
    pub q50: Vec<f64>,
    pub q975: Vec<f64>,
}

impl EffectCurve {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Fraction of grid points whose band contains `truth(t)`.
    pub fn coverage<F: Fn(f64) -> f64>(&self, truth: F) -> f64 {
        let hits = self
            .grid
            .iter()
            .enumerate()
            .filter(|&(i, &t)| {
                let v = truth(t);
                self.q025[i] <= v && v <= self.q975[i]
            })
            .count();
        hits as f64 / self.len() as f64
    }

    /// Root mean squared error of the posterior mean curve.
    pub fn rmse<F: Fn(f64) -> f64>(&self, truth: F) -> f64 {
        let sse: f64 = self
            .grid
            .iter()
            .zip(&self.mean)
            .map(|(&t, m)| (m - truth(t)).powi(2))
            .sum();
        (sse / self.len() as f64).sqrt()
    }

    pub fn mean_width(&self) -> f64 {
        self.q975
            .iter()
            .zip(&self.q025)
            .map(|(u, l)| u - l)
            .sum::<f64>()
            / self.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndOfPeriodEffect {
    pub treatment: TreatmentId,
    pub label: String,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub prob_negative: f64,
    pub prob_positive: f64,
}

/// `n` equally spaced normalized times covering [0, 1].
pub fn default_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![END_OF_PERIOD],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

fn check(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    k: TreatmentId,
) -> Result<(), PosteriorError> {
    if k.0 >= spec.n_treatments() {
        return Err(PosteriorError::UnknownTreatment(k.0));
    }
    if samples.n_draws() == 0 {
        return Err(PosteriorError::NoDraws);
    }
    Ok(())
}

/// Draws of `d_1k^t` at each of `times`, indexed `[draw][time]`.
///
/// Latent series are extended to new times through each draw's own GP
/// conditional. A single standard normal per draw is shared across times;
/// pointwise summaries only depend on the per-time marginals, which this
/// preserves.
pub fn effect_draws(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    data: &Dataset,
    k: TreatmentId,
    times: &[f64],
) -> Result<Vec<Vec<f64>>, PosteriorError> {
    check(samples, spec, k)?;
    let draws: Vec<&ParamState> = samples.draws().collect();
    if k == spec.baseline() {
        return Ok(vec![vec![0.0; times.len()]; draws.len()]);
    }
    if spec.has_latent(k) {
        let train = data.times_of(k);
        let seed = samples.seed ^ 0x9e37_79b9_7f4a_7c15;
        return draws
            .par_iter()
            .enumerate()
            .map(|(i, st)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k.0 as u64));
                rng.set_stream(i as u64);
                let z: f64 = rng.sample(StandardNormal);
                let gp = GpConditioner::new(&train, &st.latent[k.0], st.d.get(k), &st.kernel[k.0])?;
                let (mean, var) = gp.predict_marginal(times)?;
                Ok(mean
                    .iter()
                    .zip(&var)
                    .map(|(m, v)| m + v.sqrt() * z)
                    .collect())
            })
            .collect();
    }
    let t_bar = data.mean_time();
    Ok(draws
        .iter()
        .map(|st| {
            let d = st.d.get(k);
            if spec.has_slope(k) {
                times
                    .iter()
                    .map(|t| d + st.beta[k.0] * (t - t_bar))
                    .collect()
            } else {
                vec![d; times.len()]
            }
        })
        .collect())
}

pub fn effect_at_time(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    data: &Dataset,
    k: TreatmentId,
    t: f64,
) -> Result<Summary, PosteriorError> {
    let draws: Vec<f64> = effect_draws(samples, spec, data, k, &[t])?
        .into_iter()
        .map(|v| v[0])
        .collect();
    Ok(Summary::from_draws(&draws))
}

pub fn effect_curve(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    data: &Dataset,
    k: TreatmentId,
    grid: &[f64],
) -> Result<EffectCurve, PosteriorError> {
    if grid.is_empty()
        || grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(PosteriorError::BadGrid);
    }
    let draws = effect_draws(samples, spec, data, k, grid)?;
    let mut curve = EffectCurve {
        treatment: k,
        label: data.label(k).to_string(),
        grid: grid.to_vec(),
        times: grid.iter().map(|&t| data.to_calendar(t)).collect(),
        mean: Vec::with_capacity(grid.len()),
        q025: Vec::with_capacity(grid.len()),
        q50: Vec::with_capacity(grid.len()),
        q975: Vec::with_capacity(grid.len()),
    };
    let mut column = vec![0.0; draws.len()];
    for j in 0..grid.len() {
        for (c, d) in column.iter_mut().zip(&draws) {
            *c = d[j];
        }
        let s = Summary::from_draws(&column);
        curve.mean.push(s.mean);
        curve.q025.push(s.q025);
        curve.q50.push(s.q50);
        curve.q975.push(s.q975);
    }
    Ok(curve)
}

pub fn end_of_period(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    data: &Dataset,
    k: TreatmentId,
) -> Result<EndOfPeriodEffect, PosteriorError> {
    let s = effect_at_time(samples, spec, data, k, END_OF_PERIOD)?;
    Ok(EndOfPeriodEffect {
        treatment: k,
        label: data.label(k).to_string(),
        mean: s.mean,
        lower: s.q025,
        upper: s.q975,
        prob_negative: s.prob_negative,
        prob_positive: s.prob_positive,
    })
}

/// Posterior probability that `k` is less effective than the baseline at
/// time `t`, i.e. `P(d_1k^t < 0)`.
pub fn inferiority_probability(
    samples: &PosteriorSamples,
    spec: &ModelSpec,
    data: &Dataset,
    k: TreatmentId,
    t: f64,
) -> Result<f64, PosteriorError> {
    Ok(effect_at_time(samples, spec, data, k, t)?.prob_negative)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub treatment: TreatmentId,
    pub label: String,
    pub model: ModelKind,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

/// End-of-period effects of every non-baseline treatment under each run,
/// ordered by treatment, then model, then values.
pub fn compare_models(
    runs: &[(&PosteriorSamples, &ModelSpec)],
    data: &Dataset,
) -> Result<Vec<ComparisonRow>, PosteriorError> {
    if let Some((_, first)) = runs.first() {
        if runs.iter().any(|(_, s)| s.baseline() != first.baseline()) {
            return Err(PosteriorError::MismatchedBaselines);
        }
    }
    let mut rows = Vec::new();
    for (samples, spec) in runs {
        for k in (0..spec.n_treatments()).map(TreatmentId) {
            if k == spec.baseline() {
                continue;
            }
            let e = end_of_period(samples, spec, data, k)?;
            rows.push(ComparisonRow {
                treatment: k,
                label: e.label,
                model: spec.kind,
                mean: e.mean,
                lower: e.lower,
                upper: e.upper,
                width: e.upper - e.lower,
            });
        }
    }
    rows.sort_by(|a, b| {
        (a.treatment, a.model)
            .cmp(&(b.treatment, b.model))
            .then(a.mean.total_cmp(&b.mean))
            .then(a.lower.total_cmp(&b.lower))
            .then(a.upper.total_cmp(&b.upper))
    });
    Ok(rows)
}
