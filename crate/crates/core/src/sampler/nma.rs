//! Metropolis-within-Gibbs kernel for the three network models.
//!
//! All linear effect parameters (free basic parameters, slopes and latent
//! series) are stacked into one vector θ. Each study's contrast means are a
//! sparse linear map `A_i θ`, so given δ and σ² the effects have a Gaussian
//! full conditional.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::blocks::{accept, rw_scalar, ChainKernel, Tuners};
use super::{EffectUpdate, SamplerConfig, SamplerError};
use crate::density;
use crate::kernels::{mvn_logpdf, CovarianceMatrix, KernelParams};
use crate::model::{contrast_logprior, kernel_logprior, log_posterior, ModelSpec, ParamState};
use crate::network::{Dataset, TreatmentId};

const INIT_ATTEMPTS: usize = 100;

fn normal_draw(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Inverse-gamma draw with shape `a` and scale `b`.
fn inv_gamma_draw(a: f64, b: f64, rng: &mut ChaCha8Rng) -> f64 {
    1.0 / Gamma::new(a, 1.0 / b)
        .expect("positive shape and scale")
        .sample(rng)
}

/// `y·η − n·softplus(η)`: binomial log-pmf without the coefficient.
fn arm_ll(y: f64, n: f64, eta: f64) -> f64 {
    y * eta - n * density::softplus(eta)
}

struct StudyDesign {
    base: (f64, f64),
    arms: Vec<(f64, f64)>,
    /// Sparse rows of `A_i`, one per contrast.
    rows: Vec<Vec<(usize, f64)>>,
}

impl StudyDesign {
    fn q(&self) -> usize {
        self.arms.len()
    }

    fn loglik(&self, mu: f64, delta: &[f64]) -> f64 {
        arm_ll(self.base.0, self.base.1, mu)
            + self
                .arms
                .iter()
                .zip(delta)
                .map(|(&(y, n), d)| arm_ll(y, n, mu + d))
                .sum::<f64>()
    }

    fn means(&self, theta: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(p, c)| c * theta[p]).sum())
            .collect()
    }

    /// Entry of `σ²·Σ_i⁻¹ = 2(I − J/(q+1))`.
    fn precision_unit(&self, a: usize, c: usize) -> f64 {
        let off = 1.0 / (self.q() as f64 + 1.0);
        2.0 * (if a == c { 1.0 } else { 0.0 } - off)
    }
}

struct LatentGp {
    k: TreatmentId,
    start: usize,
    len: usize,
    d_index: usize,
    abs_diff: DMatrix<f64>,
    outer: DMatrix<f64>,
}

impl LatentGp {
    fn decay(&self, rho: f64) -> DMatrix<f64> {
        self.abs_diff.map(|a| (-rho * a).exp())
    }

    fn matrix(&self, p: &KernelParams, decay: &DMatrix<f64>) -> DMatrix<f64> {
        let (psi2, b2, l2, f2) = (p.psi * p.psi, p.s_b * p.s_b, p.s_l * p.s_l, p.phi * p.phi);
        DMatrix::from_fn(self.len, self.len, |i, j| {
            let white = if i == j { psi2 } else { 0.0 };
            white + (b2 + l2 * self.outer[(i, j)] + f2 * decay[(i, j)])
        })
    }

    fn covariance(&self, p: &KernelParams) -> Option<CovarianceMatrix> {
        CovarianceMatrix::new(self.matrix(p, &self.decay(p.rho))).ok()
    }

    fn logpdf(&self, x: &[f64], mean: f64, cov: &CovarianceMatrix) -> f64 {
        let x = DVector::from_column_slice(x);
        let m = DVector::from_element(self.len, mean);
        mvn_logpdf(&x, &m, cov).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Log-scale coordinates of kernel hyperparameters.
const HYPER_NAMES: [&str; 5] = ["psi", "s_b", "s_l", "phi", "rho"];

fn hyper_get(p: &KernelParams, j: usize) -> f64 {
    [p.psi, p.s_b, p.s_l, p.phi, p.rho][j]
}

fn hyper_set(p: &mut KernelParams, j: usize, v: f64) {
    match j {
        0 => p.psi = v,
        1 => p.s_b = v,
        2 => p.s_l = v,
        3 => p.phi = v,
        _ => p.rho = v,
    }
}

/// Log-Jacobian of sampling every hyperparameter on log scale, with φ's
/// prior read as a density over φ².
fn hyper_log_jacobian(p: &KernelParams) -> f64 {
    p.psi.ln() + p.s_b.ln() + p.s_l.ln() + 2.0 * p.phi.ln() + p.rho.ln()
}

#[derive(Debug, Clone, Copy)]
struct Handles {
    mu: usize,
    delta: usize,
    hyper: usize,
    d: usize,
    beta: usize,
    latent: usize,
    sigma2: usize,
}

pub struct NmaKernel<'a> {
    data: &'a Dataset,
    spec: &'a ModelSpec,
    update: EffectUpdate,
    target_scalar: f64,
    target_vector: f64,
    studies: Vec<StudyDesign>,
    dim: usize,
    /// θ index of each treatment's basic parameter (None for the baseline).
    d_index: Vec<Option<usize>>,
    beta_index: Vec<Option<usize>>,
    gps: Vec<LatentGp>,
    handles: Handles,
}

impl<'a> NmaKernel<'a> {
    pub fn new(
        data: &'a Dataset,
        spec: &'a ModelSpec,
        config: &SamplerConfig,
    ) -> Result<Self, SamplerError> {
        spec.check_data(data)?;
        let k_count = data.n_treatments();
        let mut dim = 0;
        let mut d_index = vec![None; k_count];
        let mut beta_index = vec![None; k_count];
        let mut latent_start = vec![None; k_count];
        for k in (0..k_count).map(TreatmentId) {
            if k == spec.baseline() {
                continue;
            }
            d_index[k.0] = Some(dim);
            dim += 1;
            if spec.has_slope(k) {
                beta_index[k.0] = Some(dim);
                dim += 1;
            }
            if spec.has_latent(k) {
                latent_start[k.0] = Some(dim);
                dim += data.studies_with(k).len();
            }
        }
        let t_bar = data.mean_time();
        let effect = |k: TreatmentId, study: usize, t: f64| -> Vec<(usize, f64)> {
            if let Some(start) = latent_start[k.0] {
                let slot = data.occurrence_slot(k, study).expect("arm of study");
                return vec![(start + slot, 1.0)];
            }
            let mut row = Vec::new();
            if let Some(d) = d_index[k.0] {
                row.push((d, 1.0));
            }
            if let Some(b) = beta_index[k.0] {
                row.push((b, t - t_bar));
            }
            row
        };
        let studies = data
            .studies()
            .iter()
            .map(|s| {
                let b = &s.arms[s.baseline_arm];
                let base_row = effect(b.treatment, s.id, s.time);
                let mut arms = Vec::new();
                let mut rows = Vec::new();
                for a in s.contrast_arms() {
                    let arm = &s.arms[a];
                    arms.push((arm.successes as f64, arm.size as f64));
                    let mut row = effect(arm.treatment, s.id, s.time);
                    row.extend(base_row.iter().map(|&(p, c)| (p, -c)));
                    rows.push(row);
                }
                StudyDesign {
                    base: (b.successes as f64, b.size as f64),
                    arms,
                    rows,
                }
            })
            .collect();
        let gps = (0..k_count)
            .map(TreatmentId)
            .filter_map(|k| {
                let start = latent_start[k.0]?;
                let times = data.times_of(k);
                let n = times.len();
                Some(LatentGp {
                    k,
                    start,
                    len: n,
                    d_index: d_index[k.0].expect("latent treatment is free"),
                    abs_diff: DMatrix::from_fn(n, n, |i, j| (times[i] - times[j]).abs()),
                    outer: DMatrix::from_fn(n, n, |i, j| times[i] * times[j]),
                })
            })
            .collect::<Vec<_>>();

        let n_studies = data.n_studies();
        let n_free = k_count - 1;
        let n_slopes = beta_index.iter().flatten().count();
        let hyper = 2 * n_studies;
        let d = hyper + 5 * gps.len();
        let handles = Handles {
            mu: 0,
            delta: n_studies,
            hyper,
            d,
            beta: d + n_free,
            latent: d + n_free + n_slopes,
            sigma2: d + n_free + n_slopes + gps.len(),
        };
        Ok(NmaKernel {
            data,
            spec,
            update: config.effect_update,
            target_scalar: config.target_scalar,
            target_vector: config.target_vector,
            studies,
            dim,
            d_index,
            beta_index,
            gps,
            handles,
        })
    }

    fn gather(&self, st: &ParamState) -> Vec<f64> {
        let mut theta = vec![0.0; self.dim];
        for k in (0..self.d_index.len()).map(TreatmentId) {
            if let Some(i) = self.d_index[k.0] {
                theta[i] = st.d.get(k);
            }
            if let Some(i) = self.beta_index[k.0] {
                theta[i] = st.beta[k.0];
            }
        }
        for g in &self.gps {
            theta[g.start..g.start + g.len].copy_from_slice(&st.latent[g.k.0]);
        }
        theta
    }

    fn scatter(&self, theta: &[f64], st: &mut ParamState) {
        let free: Vec<_> = st.d.free().collect();
        for k in free {
            st.d.set(k, theta[self.d_index[k.id().0].expect("free treatment")]);
        }
        for (k, idx) in self.beta_index.iter().enumerate() {
            if let Some(i) = idx {
                st.beta[k] = theta[*i];
            }
        }
        for g in &self.gps {
            st.latent[g.k.0].copy_from_slice(&theta[g.start..g.start + g.len]);
        }
    }

    fn free_d(&self) -> impl Iterator<Item = usize> + '_ {
        self.d_index.iter().flatten().copied()
    }

    fn slopes(&self) -> impl Iterator<Item = usize> + '_ {
        self.beta_index.iter().flatten().copied()
    }

    fn perturbed_start(&self, rng: &mut ChaCha8Rng) -> ParamState {
        let mut st = ParamState::initial(self.data, self.spec);
        let mut z = |sd: f64| sd * normal_draw(rng);
        for m in &mut st.mu {
            *m += z(0.3);
        }
        for d in st.delta.iter_mut().flatten() {
            *d += z(0.3);
        }
        let mut theta = self.gather(&st);
        for i in self.free_d().collect::<Vec<_>>() {
            theta[i] = z(0.3);
        }
        for i in self.slopes().collect::<Vec<_>>() {
            theta[i] = z(0.3);
        }
        for g in &self.gps {
            let d = theta[g.d_index];
            for v in &mut theta[g.start..g.start + g.len] {
                *v = d + z(0.1);
            }
        }
        self.scatter(&theta, &mut st);
        st.sigma2 *= z(0.5).exp();
        st.sigma2_mu *= z(0.5).exp();
        st.sigma2_d *= z(0.5).exp();
        for g in &self.gps {
            let p = &mut st.kernel[g.k.0];
            for j in 0..5 {
                let v = hyper_get(p, j) * z(0.5).exp();
                hyper_set(p, j, v);
            }
        }
        st
    }

    fn build_tuners(&self) -> Tuners {
        let mut t = Tuners::new();
        for _ in 0..self.studies.len() {
            t.add("mu", 0.5, self.target_scalar);
        }
        for s in &self.studies {
            let target = if s.q() == 1 {
                self.target_scalar
            } else {
                self.target_vector
            };
            t.add("delta", 0.5, target);
        }
        for g in &self.gps {
            for name in HYPER_NAMES {
                t.add(
                    format!("{name}[{}]", self.data.label(g.k)),
                    1.0,
                    self.target_scalar,
                );
            }
        }
        if self.update == EffectUpdate::RandomWalk {
            for _ in self.free_d() {
                t.add("d", 0.3, self.target_scalar);
            }
            for _ in self.slopes() {
                t.add("beta", 0.5, self.target_scalar);
            }
            for g in &self.gps {
                t.add(
                    format!("latent[{}]", self.data.label(g.k)),
                    0.3,
                    self.target_vector,
                );
            }
            t.add("sigma2", 0.5, self.target_scalar);
        }
        t
    }

    fn update_mu(&self, st: &mut ParamState, tuners: &mut Tuners, rng: &mut ChaCha8Rng) {
        let (m, v) = (st.m_mu, st.sigma2_mu);
        for (i, s) in self.studies.iter().enumerate() {
            let delta = &st.delta[i];
            let target = |x: f64| s.loglik(x, delta) + density::normal(x, m, v);
            let mut x = st.mu[i];
            let cur = target(x);
            rw_scalar(
                &mut x,
                cur,
                tuners.get_mut(self.handles.mu + i),
                rng,
                target,
            );
            st.mu[i] = x;
        }
    }

    fn update_delta(
        &self,
        st: &mut ParamState,
        theta: &[f64],
        tuners: &mut Tuners,
        rng: &mut ChaCha8Rng,
    ) {
        for (i, s) in self.studies.iter().enumerate() {
            let means = s.means(theta);
            let mu = st.mu[i];
            let target = |d: &[f64]| s.loglik(mu, d) + contrast_logprior(d, &means, st.sigma2);
            let cur = target(&st.delta[i]);
            let tuner = tuners.get_mut(self.handles.delta + i);
            let scale = tuner.scale();
            let proposal: Vec<f64> = st.delta[i]
                .iter()
                .map(|d| d + scale * normal_draw(rng))
                .collect();
            let ok = accept(target(&proposal) - cur, rng);
            tuner.record(ok);
            if ok {
                st.delta[i] = proposal;
            }
        }
    }

    /// Precision `Q` and linear term `b` of the Gaussian full conditional of
    /// θ, or None when a latent covariance cannot be factorized.
    fn effect_conditional(&self, st: &ParamState) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let mut q = DMatrix::zeros(self.dim, self.dim);
        let mut b = DVector::zeros(self.dim);
        let pd = 1.0 / st.sigma2_d;
        for i in self.free_d() {
            q[(i, i)] += pd;
            b[i] += st.m_d * pd;
        }
        for i in self.slopes() {
            q[(i, i)] += 1.0 / self.spec.priors.slope_var;
        }
        for g in &self.gps {
            let kinv = g.covariance(&st.kernel[g.k.0])?.inverse().ok()?;
            let (s, d) = (g.start, g.d_index);
            let mut total = 0.0;
            for r in 0..g.len {
                let row_sum: f64 = kinv.row(r).sum();
                total += row_sum;
                q[(s + r, d)] -= row_sum;
                q[(d, s + r)] -= row_sum;
                for c in 0..g.len {
                    q[(s + r, s + c)] += kinv[(r, c)];
                }
            }
            q[(d, d)] += total;
        }
        let inv_s2 = 1.0 / st.sigma2;
        for (i, s) in self.studies.iter().enumerate() {
            let delta = &st.delta[i];
            for (a, row_a) in s.rows.iter().enumerate() {
                let mut v = 0.0;
                for (c, row_c) in s.rows.iter().enumerate() {
                    let w = s.precision_unit(a, c) * inv_s2;
                    v += w * delta[c];
                    for &(p, x) in row_a {
                        for &(r, y) in row_c {
                            q[(p, r)] += w * x * y;
                        }
                    }
                }
                for &(p, x) in row_a {
                    b[p] += x * v;
                }
            }
        }
        Some((q, b))
    }

    fn gibbs_effects(&self, st: &mut ParamState, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let current = self.gather(st);
        let Some((q, b)) = self.effect_conditional(st) else {
            return current;
        };
        let Some(chol) = q.cholesky() else {
            return current;
        };
        let l = chol.l();
        let y = l.solve_lower_triangular(&b).expect("positive diagonal");
        let z = DVector::from_fn(self.dim, |_, _| normal_draw(rng));
        let theta = l
            .tr_solve_lower_triangular(&(y + z))
            .expect("positive diagonal");
        let theta: Vec<f64> = theta.iter().copied().collect();
        self.scatter(&theta, st);
        theta
    }

    /// `Σ r_iᵀ(σ²Σ_i⁻¹)r_i` and `Σ q_i` over studies.
    fn contrast_sse(&self, st: &ParamState, theta: &[f64]) -> (f64, usize) {
        let mut sse = 0.0;
        let mut count = 0;
        for (i, s) in self.studies.iter().enumerate() {
            let means = s.means(theta);
            let r: Vec<f64> = st.delta[i].iter().zip(&means).map(|(d, m)| d - m).collect();
            for a in 0..s.q() {
                for c in 0..s.q() {
                    sse += r[a] * s.precision_unit(a, c) * r[c];
                }
            }
            count += s.q();
        }
        (sse, count)
    }

    fn gibbs_sigma2(&self, st: &mut ParamState, theta: &[f64], rng: &mut ChaCha8Rng) {
        let (sse, count) = self.contrast_sse(st, theta);
        let pr = &self.spec.priors;
        st.sigma2 = inv_gamma_draw(
            pr.ig_shape + count as f64 / 2.0,
            pr.ig_scale + sse / 2.0,
            rng,
        );
    }

    fn contrast_total(&self, st: &ParamState, theta: &[f64], sigma2: f64) -> f64 {
        self.studies
            .iter()
            .enumerate()
            .map(|(i, s)| contrast_logprior(&st.delta[i], &s.means(theta), sigma2))
            .sum()
    }

    /// Log density of θ given everything else, up to a constant.
    fn effect_logdensity(&self, st: &ParamState, theta: &[f64], covs: &[CovarianceMatrix]) -> f64 {
        let mut total = self.contrast_total(st, theta, st.sigma2);
        for i in self.free_d() {
            total += density::normal(theta[i], st.m_d, st.sigma2_d);
        }
        for i in self.slopes() {
            total += density::normal(theta[i], 0.0, self.spec.priors.slope_var);
        }
        for (g, cov) in self.gps.iter().zip(covs) {
            total += g.logpdf(&theta[g.start..g.start + g.len], theta[g.d_index], cov);
        }
        total
    }

    fn rw_effects(
        &self,
        st: &mut ParamState,
        tuners: &mut Tuners,
        rng: &mut ChaCha8Rng,
    ) -> Vec<f64> {
        let mut theta = self.gather(st);
        let Some(covs) = self
            .gps
            .iter()
            .map(|g| g.covariance(&st.kernel[g.k.0]))
            .collect::<Option<Vec<_>>>()
        else {
            return theta;
        };
        let mut cur = self.effect_logdensity(st, &theta, &covs);
        let scalars: Vec<(usize, usize)> = self
            .free_d()
            .enumerate()
            .map(|(j, i)| (self.handles.d + j, i))
            .chain(
                self.slopes()
                    .enumerate()
                    .map(|(j, i)| (self.handles.beta + j, i)),
            )
            .collect();
        for (h, i) in scalars {
            let tuner = tuners.get_mut(h);
            let old = theta[i];
            theta[i] = old + tuner.scale() * normal_draw(rng);
            let new = self.effect_logdensity(st, &theta, &covs);
            let ok = accept(new - cur, rng);
            tuner.record(ok);
            if ok {
                cur = new;
            } else {
                theta[i] = old;
            }
        }
        for (j, (g, cov)) in self.gps.iter().zip(&covs).enumerate() {
            let tuner = tuners.get_mut(self.handles.latent + j);
            let z = DVector::from_fn(g.len, |_, _| normal_draw(rng));
            let step = cov.factor() * z * tuner.scale();
            let old: Vec<f64> = theta[g.start..g.start + g.len].to_vec();
            for (r, v) in theta[g.start..g.start + g.len].iter_mut().enumerate() {
                *v += step[r];
            }
            let new = self.effect_logdensity(st, &theta, &covs);
            let ok = accept(new - cur, rng);
            tuner.record(ok);
            if ok {
                cur = new;
            } else {
                theta[g.start..g.start + g.len].copy_from_slice(&old);
            }
        }
        self.scatter(&theta, st);
        theta
    }

    fn rw_sigma2(
        &self,
        st: &mut ParamState,
        theta: &[f64],
        tuners: &mut Tuners,
        rng: &mut ChaCha8Rng,
    ) {
        let pr = self.spec.priors;
        let target = |u: f64| {
            let s2 = u.exp();
            self.contrast_total(st, theta, s2)
                + density::inv_gamma(s2, pr.ig_shape, pr.ig_scale)
                + u
        };
        let mut u = st.sigma2.ln();
        let cur = target(u);
        rw_scalar(
            &mut u,
            cur,
            tuners.get_mut(self.handles.sigma2),
            rng,
            target,
        );
        st.sigma2 = u.exp();
    }

    fn gibbs_hyper(&self, st: &mut ParamState, rng: &mut ChaCha8Rng) {
        let pr = &self.spec.priors;
        let n = st.mu.len() as f64;
        let prec = n / st.sigma2_mu + 1.0 / pr.mean_var;
        let mean = st.mu.iter().sum::<f64>() / st.sigma2_mu / prec;
        st.m_mu = mean + normal_draw(rng) / prec.sqrt();
        let ss: f64 = st.mu.iter().map(|m| (m - st.m_mu).powi(2)).sum();
        st.sigma2_mu = inv_gamma_draw(pr.ig_shape + n / 2.0, pr.ig_scale + ss / 2.0, rng);

        let d: Vec<f64> = st.d.free().map(|k| st.d.get(k.id())).collect();
        let n = d.len() as f64;
        let prec = n / st.sigma2_d + 1.0 / pr.mean_var;
        let mean = d.iter().sum::<f64>() / st.sigma2_d / prec;
        st.m_d = mean + normal_draw(rng) / prec.sqrt();
        let ss: f64 = d.iter().map(|v| (v - st.m_d).powi(2)).sum();
        st.sigma2_d = inv_gamma_draw(pr.ig_shape + n / 2.0, pr.ig_scale + ss / 2.0, rng);
    }

    /// Log target of one treatment's kernel hyperparameters on log scale.
    fn hyper_target(
        &self,
        g: &LatentGp,
        st: &ParamState,
        p: &KernelParams,
        decay: &DMatrix<f64>,
    ) -> f64 {
        if p.validate().is_err() || [p.psi, p.s_b, p.s_l].iter().any(|&v| v <= 0.0) {
            return f64::NEG_INFINITY;
        }
        let Ok(cov) = CovarianceMatrix::new(g.matrix(p, decay)) else {
            return f64::NEG_INFINITY;
        };
        g.logpdf(&st.latent[g.k.0], st.d.get(g.k), &cov)
            + kernel_logprior(p, &self.spec.priors)
            + hyper_log_jacobian(p)
    }

    fn update_kernels(&self, st: &mut ParamState, tuners: &mut Tuners, rng: &mut ChaCha8Rng) {
        for (gi, g) in self.gps.iter().enumerate() {
            let mut p = st.kernel[g.k.0];
            let mut decay = g.decay(p.rho);
            let mut cur = self.hyper_target(g, st, &p, &decay);
            for j in 0..5 {
                let tuner = tuners.get_mut(self.handles.hyper + 5 * gi + j);
                let mut q = p;
                hyper_set(
                    &mut q,
                    j,
                    (hyper_get(&p, j).ln() + tuner.scale() * normal_draw(rng)).exp(),
                );
                let q_decay = if j == 4 {
                    g.decay(q.rho)
                } else {
                    decay.clone()
                };
                let new = self.hyper_target(g, st, &q, &q_decay);
                let ok = accept(new - cur, rng);
                tuner.record(ok);
                if ok {
                    p = q;
                    decay = q_decay;
                    cur = new;
                }
            }
            st.kernel[g.k.0] = p;
        }
    }
}

impl ChainKernel for NmaKernel<'_> {
    type State = ParamState;

    fn init(&self, rng: &mut ChaCha8Rng) -> Result<(ParamState, Tuners), SamplerError> {
        for _ in 0..INIT_ATTEMPTS {
            let st = self.perturbed_start(rng);
            if log_posterior(self.data, &st, self.spec).is_finite() {
                return Ok((st, self.build_tuners()));
            }
        }
        Err(SamplerError::Initialization {
            attempts: INIT_ATTEMPTS,
        })
    }

    fn step(&self, st: &mut ParamState, tuners: &mut Tuners, rng: &mut ChaCha8Rng) {
        self.update_mu(st, tuners, rng);
        let theta = self.gather(st);
        self.update_delta(st, &theta, tuners, rng);
        match self.update {
            EffectUpdate::Conjugate => {
                let theta = self.gibbs_effects(st, rng);
                self.gibbs_sigma2(st, &theta, rng);
            }
            EffectUpdate::RandomWalk => {
                let theta = self.rw_effects(st, tuners, rng);
                self.rw_sigma2(st, &theta, tuners, rng);
            }
        }
        self.gibbs_hyper(st, rng);
        self.update_kernels(st, tuners, rng);
    }
}
