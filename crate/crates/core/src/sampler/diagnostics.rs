//! Split R-hat and effective sample size from per-chain scalar traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticError {
    #[error("need at least {needed} chains, got {got}")]
    TooFewChains { needed: usize, got: usize },
    #[error("need at least 4 draws per chain, got {0}")]
    TooFewDraws(usize),
    #[error("chains have unequal lengths")]
    Ragged,
    #[error("zero within-chain variance")]
    Degenerate,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn check(chains: &[Vec<f64>], min_chains: usize) -> Result<usize, DiagnosticError> {
    if chains.len() < min_chains {
        return Err(DiagnosticError::TooFewChains {
            needed: min_chains,
            got: chains.len(),
        });
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(DiagnosticError::Ragged);
    }
    if n < 4 {
        return Err(DiagnosticError::TooFewDraws(n));
    }
    Ok(n)
}

/// Within-chain mean variance `W` and pooled variance estimate `var⁺`.
fn variance_components(chains: &[&[f64]]) -> (f64, f64, Vec<f64>) {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, &m)| sample_var(c, m))
        .sum::<f64>()
        / chains.len() as f64;
    let b = if chains.len() > 1 {
        n * sample_var(&means, mean(&means))
    } else {
        0.0
    };
    (w, (n - 1.0) / n * w + b / n, means)
}

/// Potential scale reduction over chains split in half. An odd trailing
/// draw is dropped from each half split.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64, DiagnosticError> {
    let n = check(chains, 2)?;
    let half = n / 2;
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[n - half..]])
        .collect();
    let (w, var_plus, _) = variance_components(&halves);
    if w.is_nan() || w <= 0.0 {
        return Err(DiagnosticError::Degenerate);
    }
    Ok((var_plus / w).sqrt())
}

fn autocov(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag]
        .iter()
        .zip(&x[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

/// Effective sample size with Geyer's initial monotone positive-sequence
/// truncation of the multi-chain autocorrelation.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64, DiagnosticError> {
    let n = check(chains, 1)?;
    let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
    let (w, var_plus, means) = variance_components(&refs);
    if w.is_nan() || w <= 0.0 {
        return Err(DiagnosticError::Degenerate);
    }
    let rho = |lag: usize| {
        let acov = refs
            .iter()
            .zip(&means)
            .map(|(c, &m)| autocov(c, m, lag))
            .sum::<f64>()
            / refs.len() as f64;
        1.0 - (w - acov) / var_plus
    };
    let mut tau = -1.0;
    let mut prev = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = rho(lag) + rho(lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        tau += 2.0 * pair;
        prev = pair;
        lag += 2;
    }
    let total = (chains.len() * n) as f64;
    Ok(total / tau.max(1.0 / total.log10().max(1.0)))
}
