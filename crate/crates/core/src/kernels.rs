//! Gaussian-process covariance for latent treatment-effect time series.
//!
//! The covariance is the sum of a white-noise kernel `ψ²·I`, a linear kernel
//! `s_b² + s_l²·t·t'` and a Matérn-½ (Ornstein–Uhlenbeck) kernel
//! `φ²·exp(−ρ·|t − t'|)`. Matrices are small (one row per study of a
//! treatment), so everything here is dense.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Jitter ladder tried in order when a factorization fails.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("covariance is not positive definite even with jitter {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance factor is singular")]
    Singular,
    #[error("invalid kernel hyperparameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Hyperparameters of the composite kernel for one treatment.
///
/// The Matérn smoothness is fixed at ν = ½ and is not a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// White-noise amplitude ψ.
    pub psi: f64,
    /// Linear-kernel bias amplitude.
    pub s_b: f64,
    /// Linear-kernel slope amplitude.
    pub s_l: f64,
    /// Matérn amplitude φ.
    pub phi: f64,
    /// Matérn inverse length-scale ρ.
    pub rho: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            psi: 0.1,
            s_b: 0.1,
            s_l: 0.1,
            phi: 0.1,
            rho: 1.0,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<(), KernelError> {
        for (name, value) in [
            ("psi", self.psi),
            ("s_b", self.s_b),
            ("s_l", self.s_l),
            ("phi", self.phi),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(KernelError::InvalidParameter { name, value });
            }
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(KernelError::InvalidParameter {
                name: "rho",
                value: self.rho,
            });
        }
        Ok(())
    }

    /// Linear plus Matérn covariance between two time points (no white noise).
    pub fn smooth(&self, a: f64, b: f64) -> f64 {
        self.s_b * self.s_b
            + self.s_l * self.s_l * (a * b)
            + self.phi * self.phi * (-self.rho * (a - b).abs()).exp()
    }
}

pub fn k_white(params: &KernelParams, n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n) * (params.psi * params.psi)
}

pub fn k_linear(params: &KernelParams, times: &[f64]) -> DMatrix<f64> {
    let (b2, l2) = (params.s_b * params.s_b, params.s_l * params.s_l);
    DMatrix::from_fn(times.len(), times.len(), |i, j| {
        b2 + l2 * (times[i] * times[j])
    })
}

pub fn k_matern12(params: &KernelParams, times: &[f64]) -> DMatrix<f64> {
    let p2 = params.phi * params.phi;
    DMatrix::from_fn(times.len(), times.len(), |i, j| {
        p2 * (-params.rho * (times[i] - times[j]).abs()).exp()
    })
}

/// A symmetric covariance matrix together with its lower Cholesky factor.
///
/// The factor satisfies `L·Lᵀ = M + jitter·I`; the stored matrix is the
/// unjittered `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
    jitter: f64,
}

/// Lower Cholesky factor. Pivots at or below `floor` fail, unless
/// `semidefinite` is set, in which case a pivot within `floor` of zero
/// zeroes its column.
fn cholesky_lower(m: &DMatrix<f64>, floor: f64, semidefinite: bool) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !d.is_finite() {
            return None;
        }
        if d <= floor {
            if semidefinite && d >= -floor {
                continue;
            }
            return None;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

fn pivot_floor(m: &DMatrix<f64>) -> f64 {
    let scale = m.diagonal().iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    scale * 1e-14
}

impl CovarianceMatrix {
    /// Factorize with the adaptive jitter ladder.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, KernelError> {
        if !matrix.is_square() {
            return Err(KernelError::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let n = matrix.nrows();
        for jitter in JITTER_LADDER {
            let mut jittered = matrix.clone();
            for i in 0..n {
                jittered[(i, i)] += jitter;
            }
            let floor = pivot_floor(&jittered);
            if let Some(factor) = cholesky_lower(&jittered, floor, false) {
                return Ok(CovarianceMatrix {
                    matrix,
                    factor,
                    jitter,
                });
            }
        }
        Err(KernelError::NotPositiveDefinite {
            max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        })
    }

    /// Factorize a positive semidefinite matrix without adding jitter.
    /// Zero pivots give zero columns in the factor.
    pub fn semidefinite(matrix: DMatrix<f64>) -> Result<Self, KernelError> {
        let floor = pivot_floor(&matrix).max(f64::MIN_POSITIVE);
        let factor = cholesky_lower(&matrix, floor, true)
            .ok_or(KernelError::NotPositiveDefinite { max_jitter: 0.0 })?;
        Ok(CovarianceMatrix {
            matrix,
            factor,
            jitter: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn is_nonsingular(&self) -> bool {
        self.factor.diagonal().iter().all(|&d| d > 0.0)
    }

    /// `L⁻¹·b`.
    pub fn whiten(&self, b: &DVector<f64>) -> Result<DVector<f64>, KernelError> {
        if b.len() != self.dim() {
            return Err(KernelError::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        if !self.is_nonsingular() {
            return Err(KernelError::Singular);
        }
        Ok(self
            .factor
            .solve_lower_triangular(b)
            .expect("nonzero diagonal"))
    }

    /// `(M + jitter·I)⁻¹·b`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, KernelError> {
        let w = self.whiten(b)?;
        Ok(self
            .factor
            .tr_solve_lower_triangular(&w)
            .expect("nonzero diagonal"))
    }

    /// `(M + jitter·I)⁻¹·B` for a matrix right-hand side.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>, KernelError> {
        if !self.is_nonsingular() {
            return Err(KernelError::Singular);
        }
        let w = self
            .factor
            .solve_lower_triangular(b)
            .expect("nonzero diagonal");
        Ok(self
            .factor
            .tr_solve_lower_triangular(&w)
            .expect("nonzero diagonal"))
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>, KernelError> {
        self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()))
    }

    /// `Σ ln L_ii`, i.e. half the log-determinant.
    pub fn half_log_det(&self) -> f64 {
        self.factor.diagonal().iter().map(|d| d.ln()).sum()
    }
}

/// Summed kernel `K_W + K_L + K_M` at `times`, factorized with jitter.
pub fn build_covariance(
    params: &KernelParams,
    times: &[f64],
) -> Result<CovarianceMatrix, KernelError> {
    let n = times.len();
    let psi2 = params.psi * params.psi;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let white = if i == j { psi2 } else { 0.0 };
        white + params.smooth(times[i], times[j])
    });
    CovarianceMatrix::new(m)
}

/// `log N(x; mean, cov)` evaluated through the cached factor.
pub fn mvn_logpdf(
    x: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &CovarianceMatrix,
) -> Result<f64, KernelError> {
    if mean.len() != x.len() {
        return Err(KernelError::DimensionMismatch {
            expected: x.len(),
            got: mean.len(),
        });
    }
    let z = cov.whiten(&(x - mean))?;
    let n = x.len() as f64;
    Ok(-0.5 * n * LN_2PI - cov.half_log_det() - 0.5 * z.norm_squared())
}

/// `mean + L·z` with `z` standard normal.
pub fn mvn_sample<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &CovarianceMatrix,
    rng: &mut R,
) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + cov.factor() * z
}

/// Conditional law of the latent series at `query_times`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpPrediction {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Shared pieces of a GP conditional: the factorized training covariance
/// and the weights `K⁻¹(y − m)`.
#[derive(Debug, Clone)]
pub struct GpConditioner<'a> {
    train_times: &'a [f64],
    mean_level: f64,
    params: KernelParams,
    train_cov: CovarianceMatrix,
    weights: DVector<f64>,
}

impl<'a> GpConditioner<'a> {
    pub fn new(
        train_times: &'a [f64],
        train_values: &[f64],
        mean_level: f64,
        params: &KernelParams,
    ) -> Result<Self, KernelError> {
        if train_times.len() != train_values.len() {
            return Err(KernelError::DimensionMismatch {
                expected: train_times.len(),
                got: train_values.len(),
            });
        }
        let train_cov = build_covariance(params, train_times)?;
        Self::with_covariance(train_times, train_values, mean_level, params, train_cov)
    }

    /// Reuse an already factorized training covariance.
    pub fn with_covariance(
        train_times: &'a [f64],
        train_values: &[f64],
        mean_level: f64,
        params: &KernelParams,
        train_cov: CovarianceMatrix,
    ) -> Result<Self, KernelError> {
        let resid = DVector::from_iterator(
            train_values.len(),
            train_values.iter().map(|v| v - mean_level),
        );
        let weights = train_cov.solve(&resid)?;
        Ok(GpConditioner {
            train_times,
            mean_level,
            params: *params,
            train_cov,
            weights,
        })
    }

    /// Cross-covariance between training and query times. White noise is
    /// observation-level and does not enter here.
    fn cross(&self, query: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.train_times.len(), query.len(), |i, j| {
            self.params.smooth(self.train_times[i], query[j])
        })
    }

    pub fn predict(&self, query: &[f64]) -> Result<GpPrediction, KernelError> {
        let ks = self.cross(query);
        let mean = ks.tr_mul(&self.weights).add_scalar(self.mean_level);
        let v = self.train_cov.whiten_matrix(&ks)?;
        let psi2 = self.params.psi * self.params.psi;
        let kss = DMatrix::from_fn(query.len(), query.len(), |i, j| {
            let white = if i == j { psi2 } else { 0.0 };
            white + self.params.smooth(query[i], query[j])
        });
        let cov = kss - v.tr_mul(&v);
        Ok(GpPrediction { mean, cov })
    }

    /// Pointwise predictive means and variances, skipping the query cross terms.
    pub fn predict_marginal(&self, query: &[f64]) -> Result<(Vec<f64>, Vec<f64>), KernelError> {
        let ks = self.cross(query);
        let mean = ks.tr_mul(&self.weights).add_scalar(self.mean_level);
        let v = self.train_cov.whiten_matrix(&ks)?;
        let psi2 = self.params.psi * self.params.psi;
        let var = query
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let explained = v.column(j).norm_squared();
                (psi2 + self.params.smooth(t, t) - explained).max(0.0)
            })
            .collect();
        Ok((mean.iter().copied().collect(), var))
    }
}

impl CovarianceMatrix {
    fn whiten_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>, KernelError> {
        if !self.is_nonsingular() {
            return Err(KernelError::Singular);
        }
        Ok(self
            .factor
            .solve_lower_triangular(b)
            .expect("nonzero diagonal"))
    }
}

/// Standard GP conditional of the latent series at `query_times` given its
/// values at `train_times` and constant prior mean `mean_level`.
pub fn gp_condition(
    train_times: &[f64],
    train_values: &[f64],
    mean_level: f64,
    params: &KernelParams,
    query_times: &[f64],
) -> Result<GpPrediction, KernelError> {
    GpConditioner::new(train_times, train_values, mean_level, params)?.predict(query_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(psi: f64, s_b: f64, s_l: f64, phi: f64, rho: f64) -> KernelParams {
        KernelParams {
            psi,
            s_b,
            s_l,
            phi,
            rho,
        }
    }

    #[test]
    fn white_kernel() {
        assert_eq!(
            k_white(&params(1.0, 0., 0., 0., 1.), 3),
            DMatrix::identity(3, 3)
        );
        assert_eq!(
            k_white(&params(0.0, 0., 0., 0., 1.), 2),
            DMatrix::zeros(2, 2)
        );
        assert_eq!(k_white(&params(2.0, 0., 0., 0., 1.), 1)[(0, 0)], 4.0);
    }

    #[test]
    fn linear_kernel() {
        let ones = k_linear(&params(0., 1., 0., 0., 1.), &[0.3, 0.9]);
        assert_eq!(ones, DMatrix::from_element(2, 2, 1.0));
        let m = k_linear(&params(0., 0., 1., 0., 1.), &[1.0, 2.0]);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        let z = k_linear(&params(0., 0., 1., 0., 1.), &[0.0, 0.0]);
        assert_eq!(z, DMatrix::zeros(2, 2));
    }

    #[test]
    fn matern_kernel() {
        assert_eq!(
            k_matern12(&params(0., 0., 0., 1., 7.3), &[0.4])[(0, 0)],
            1.0
        );
        let m = k_matern12(&params(0., 0., 0., 2., 0.5), &[0.0, 2.0]);
        assert_eq!(m[(0, 0)], 4.0);
        assert_abs_diff_eq!(m[(0, 1)], 4.0 * (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)], 1.47152, epsilon = 1e-5);
        let far = k_matern12(&params(0., 0., 0., 1., 1e3), &[0.0, 1.0]);
        assert!(far[(0, 1)] < 1e-300);
    }

    #[test]
    fn summed_kernel_examples() {
        let c = build_covariance(&params(1., 1., 1., 1., 1.), &[0.0]).unwrap();
        assert_eq!(c.matrix()[(0, 0)], 3.0);
        let c = build_covariance(&params(1., 0., 0., 0., 1.), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(c.matrix(), &DMatrix::identity(4, 4));
        assert_eq!(c.jitter(), 0.0);
    }

    #[test]
    fn rank_deficient_linear_kernel_needs_jitter() {
        let c = build_covariance(&params(0., 1., 1., 0., 1.), &[0.0, 0.5, 1.0]).unwrap();
        assert!(c.jitter() > 0.0 && c.jitter() <= 1e-6);
    }

    #[test]
    fn logpdf_closed_forms() {
        let cov = CovarianceMatrix::new(DMatrix::identity(1, 1)).unwrap();
        let v = mvn_logpdf(&DVector::from_element(1, 0.0), &DVector::zeros(1), &cov).unwrap();
        assert_abs_diff_eq!(v, -0.918_938_533_204_672_7, epsilon = 1e-15);

        let cov = build_covariance(&params(0.5, 0.3, 0.2, 0.8, 2.0), &[0.0, 0.4, 0.9]).unwrap();
        let x = DVector::from_vec(vec![0.2, -0.1, 0.5]);
        let at_mean = mvn_logpdf(&x, &x, &cov).unwrap();
        assert_abs_diff_eq!(at_mean, -1.5 * LN_2PI - cov.half_log_det(), epsilon = 1e-14);

        assert!(matches!(
            mvn_logpdf(&x, &DVector::zeros(2), &cov),
            Err(KernelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn logpdf_matches_dense_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let times: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let p = params(
                rng.random_range(0.1..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.1..5.0),
            );
            let cov = build_covariance(&p, &times).unwrap();
            let x = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let mu = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let m = cov.matrix().clone();
            let inv = m.clone().try_inverse().unwrap();
            let r = &x - &mu;
            let oracle = -1.5 * (2.0 * std::f64::consts::PI).ln()
                - 0.5 * m.determinant().ln()
                - 0.5 * (r.transpose() * inv * &r)[(0, 0)];
            assert_abs_diff_eq!(mvn_logpdf(&x, &mu, &cov).unwrap(), oracle, epsilon = 1e-9);
        }
    }

    #[test]
    fn logpdf_is_permutation_invariant() {
        let times = [0.1, 0.5, 0.7, 0.95];
        let p = params(0.3, 0.4, 0.5, 0.6, 3.0);
        let x = [0.3, -0.2, 0.8, 0.1];
        let mu = [0.0, 0.1, 0.2, 0.3];
        let perm = [2, 0, 3, 1];
        let a = mvn_logpdf(
            &DVector::from_row_slice(&x),
            &DVector::from_row_slice(&mu),
            &build_covariance(&p, &times).unwrap(),
        )
        .unwrap();
        let pt: Vec<f64> = perm.iter().map(|&i| times[i]).collect();
        let px: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
        let pm: Vec<f64> = perm.iter().map(|&i| mu[i]).collect();
        let b = mvn_logpdf(
            &DVector::from_vec(px),
            &DVector::from_vec(pm),
            &build_covariance(&p, &pt).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn sample_zero_covariance_returns_mean() {
        let cov = CovarianceMatrix::semidefinite(DMatrix::zeros(3, 3)).unwrap();
        let mean = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(mvn_sample(&mean, &cov, &mut rng), mean);
    }

    #[test]
    fn sample_is_deterministic_and_matches_covariance() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 0.5]);
        let cov = CovarianceMatrix::new(m.clone()).unwrap();
        let mean = DVector::from_vec(vec![1.0, -1.0]);
        let draw = |seed| mvn_sample(&mean, &cov, &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(draw(9), draw(9));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let draws: Vec<DVector<f64>> = (0..n).map(|_| mvn_sample(&mean, &cov, &mut rng)).collect();
        let avg = draws.iter().fold(DVector::zeros(2), |a, d| a + d) / n as f64;
        let mut s = DMatrix::zeros(2, 2);
        for d in &draws {
            let r = d - &avg;
            s += &r * r.transpose();
        }
        s /= (n - 1) as f64;
        for i in 0..2 {
            for j in 0..2 {
                let rel = (s[(i, j)] - m[(i, j)]).abs() / m[(i, j)].abs();
                assert!(rel < 0.1, "entry ({i},{j}): {} vs {}", s[(i, j)], m[(i, j)]);
            }
        }
    }

    #[test]
    fn noise_free_interpolation() {
        let times = [0.0, 0.3, 0.6, 1.0];
        let values = [0.2, 0.5, -0.1, 0.4];
        let p = params(0.0, 0.3, 0.4, 0.9, 2.0);
        let pred = gp_condition(&times, &values, 0.1, &p, &[0.6]).unwrap();
        assert_abs_diff_eq!(pred.mean[0], -0.1, epsilon = 1e-6);
        assert!(pred.cov[(0, 0)].abs() <= 1e-8);
    }

    #[test]
    fn white_noise_only_reverts_to_mean() {
        let p = params(0.7, 0.0, 0.0, 0.0, 1.0);
        let pred = gp_condition(&[0.0, 0.5], &[1.0, -3.0], 0.25, &p, &[0.8]).unwrap();
        assert_abs_diff_eq!(pred.mean[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(pred.cov[(0, 0)], 0.49, epsilon = 1e-15);
    }

    #[test]
    fn marginal_prediction_matches_joint_diagonal() {
        let times = [0.0, 0.2, 0.2, 0.9];
        let values = [0.1, 0.4, 0.35, -0.2];
        let p = params(0.2, 0.5, 0.3, 0.8, 4.0);
        let query = [0.0, 0.5, 1.0];
        let g = GpConditioner::new(&times, &values, 0.05, &p).unwrap();
        let joint = g.predict(&query).unwrap();
        let (mean, var) = g.predict_marginal(&query).unwrap();
        for j in 0..query.len() {
            assert_abs_diff_eq!(mean[j], joint.mean[j], epsilon = 1e-14);
            assert_abs_diff_eq!(var[j], joint.cov[(j, j)], epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_are_flagged() {
        assert!(params(-0.1, 0., 0., 0., 1.).validate().is_err());
        assert!(params(0.1, 0., 0., 0., 0.).validate().is_err());
        assert!(params(0.1, 0., 0., f64::NAN, 1.).validate().is_err());
        assert!(params(0., 0., 0., 0., 1.).validate().is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn kernel() -> impl Strategy<Value = KernelParams> {
            (0.0..2.0, 0.0..2.0, 0.0..2.0, 0.0..2.0, 0.01..20.0).prop_map(
                |(psi, s_b, s_l, phi, rho)| KernelParams {
                    psi,
                    s_b,
                    s_l,
                    phi,
                    rho,
                },
            )
        }

        proptest! {
            #[test]
            fn sum_decomposition_and_symmetry(
                p in kernel(),
                times in proptest::collection::vec(0.0..1.0f64, 1..20),
            ) {
                let c = build_covariance(&p, &times).unwrap();
                let sum = k_white(&p, times.len()) + k_linear(&p, &times) + k_matern12(&p, &times);
                let m = c.matrix();
                prop_assert_eq!(m, &m.transpose());
                for (a, b) in m.iter().zip(sum.iter()) {
                    prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * b.abs().max(1.0));
                }
                let mut target = m.clone();
                for i in 0..times.len() {
                    target[(i, i)] += c.jitter();
                }
                let recon = c.factor() * c.factor().transpose();
                let scale = m.amax().max(f64::MIN_POSITIVE);
                prop_assert!((recon - target).amax() <= 1e-10 * scale.max(1e-300) + 1e-300);
            }
        }
    }
}
