//! (μ/μ_w, λ)-CMA-ES with rank-one and rank-μ covariance updates and
//! cumulative step-size adaptation, restricted to a box.
//!
//! Maximizes: candidates are ranked by descending objective value.
//! Out-of-box candidates are resampled, then clipped.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::BoxDomain;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmaesConfig {
    /// Total objective evaluations.
    pub budget: usize,
    /// λ; `None` picks `4 + ⌊3 ln d⌋`.
    pub population: Option<usize>,
    /// Initial step as a fraction of `diagonal / √d`.
    pub step_factor: f64,
    pub max_resamples: usize,
}

impl CmaesConfig {
    pub fn default_population(dim: usize) -> usize {
        4 + (3.0 * (dim as f64).ln()).floor() as usize
    }

    /// `100 λ` evaluations with default population.
    pub fn for_dim(dim: usize) -> Self {
        Self::with_budget(100 * Self::default_population(dim))
    }

    pub fn with_budget(budget: usize) -> Self {
        Self {
            budget,
            population: None,
            step_factor: 0.3,
            max_resamples: 10,
        }
    }
}

/// Best point ever evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum<T> {
    pub point: Vec<T>,
    pub value: T,
    pub evaluations: usize,
}

/// Maximizes `objective` over `domain` with the default strategy parameters.
pub fn maximize<T, F, R>(objective: F, domain: &BoxDomain<T>, budget: usize, rng: &mut R) -> Result<Maximum<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
    R: Rng + ?Sized,
{
    maximize_with(objective, domain, &CmaesConfig::with_budget(budget), rng)
}

pub fn maximize_with<T, F, R>(
    mut objective: F,
    domain: &BoxDomain<T>,
    cfg: &CmaesConfig,
    rng: &mut R,
) -> Result<Maximum<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
    R: Rng + ?Sized,
{
    let n = domain.dim();
    let lambda = cfg.population.unwrap_or_else(|| CmaesConfig::default_population(n)).max(2);
    if cfg.budget < lambda {
        return Err(Error::Domain(format!(
            "evaluation budget {} is smaller than the population size {lambda}",
            cfg.budget
        )));
    }
    let mu = lambda / 2;
    let nf = T::from_usize_lossy(n);
    let one = T::one();
    let two = T::lit(2.0);

    let raw: Vec<T> = (0..mu)
        .map(|i| (T::from_usize_lossy(lambda + 1) / two).ln() - T::from_usize_lossy(i + 1).ln())
        .collect();
    let wsum: T = raw.iter().copied().sum();
    let weights: Vec<T> = raw.iter().map(|&w| w / wsum).collect();
    let mu_eff = one / weights.iter().map(|&w| w * w).sum::<T>();

    let c_sigma = (mu_eff + two) / (nf + mu_eff + T::lit(5.0));
    let d_sigma = one + two * T::zero().max(((mu_eff - one) / (nf + one)).sqrt() - one) + c_sigma;
    let c_c = (T::lit(4.0) + mu_eff / nf) / (nf + T::lit(4.0) + two * mu_eff / nf);
    let c_1 = two / ((nf + T::lit(1.3)) * (nf + T::lit(1.3)) + mu_eff);
    let c_mu = (one - c_1).min(two * (mu_eff - two + one / mu_eff) / ((nf + two) * (nf + two) + mu_eff));
    let chi_n = nf.sqrt() * (one - one / (T::lit(4.0) * nf) + one / (T::lit(21.0) * nf * nf));

    let diagonal = domain.diagonal();
    let sigma0 = T::lit(cfg.step_factor) * diagonal / nf.sqrt();
    let mut sigma = sigma0;
    let mut mean = domain.center();
    let mut cov = Matrix::<T>::identity(n);
    let mut basis = Matrix::<T>::identity(n);
    let mut scales = vec![one; n];
    let mut p_sigma = vec![T::zero(); n];
    let mut p_c = vec![T::zero(); n];

    let mut best = Maximum {
        point: mean.clone(),
        value: T::neg_infinity(),
        evaluations: 0,
    };
    let mut generation = 0usize;

    while best.evaluations + lambda <= cfg.budget {
        let mut pop: Vec<(Vec<T>, Vec<T>, T)> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let mut x = vec![T::zero(); n];
            let mut y = vec![T::zero(); n];
            for attempt in 0..=cfg.max_resamples {
                let z: Vec<T> = (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
                for i in 0..n {
                    y[i] = (0..n).map(|j| basis[(i, j)] * scales[j] * z[j]).sum();
                    x[i] = mean[i] + sigma * y[i];
                }
                if domain.contains(&x) {
                    break;
                }
                if attempt == cfg.max_resamples {
                    domain.clip(&mut x);
                    for i in 0..n {
                        y[i] = (x[i] - mean[i]) / sigma;
                    }
                }
            }
            let v = objective(&x);
            let v = if v.is_finite() { v } else { T::neg_infinity() };
            best.evaluations += 1;
            if v > best.value || (best.value == T::neg_infinity() && best.evaluations == 1) {
                best.value = v;
                best.point.clone_from(&x);
            }
            pop.push((x, y, v));
        }
        generation += 1;

        // descending objective; stable so ties keep sampling order
        pop.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal));

        let mut y_w = vec![T::zero(); n];
        for (w, (_, y, _)) in weights.iter().zip(&pop) {
            for i in 0..n {
                y_w[i] += *w * y[i];
            }
        }
        for i in 0..n {
            mean[i] += sigma * y_w[i];
        }

        // C^{-1/2} y_w = B D⁻¹ Bᵀ y_w
        let bt_y: Vec<T> = (0..n).map(|j| (0..n).map(|i| basis[(i, j)] * y_w[i]).sum()).collect();
        let whitened: Vec<T> = (0..n)
            .map(|i| (0..n).map(|j| basis[(i, j)] * bt_y[j] / scales[j]).sum())
            .collect();
        let cs_norm = (c_sigma * (two - c_sigma) * mu_eff).sqrt();
        for i in 0..n {
            p_sigma[i] = (one - c_sigma) * p_sigma[i] + cs_norm * whitened[i];
        }
        let ps_norm = p_sigma.iter().map(|&v| v * v).sum::<T>().sqrt();
        let decay = one - (one - c_sigma).powi(2 * generation as i32);
        let h_sigma = if ps_norm / decay.sqrt() < (T::lit(1.4) + two / (nf + one)) * chi_n {
            one
        } else {
            T::zero()
        };
        let cc_norm = (c_c * (two - c_c) * mu_eff).sqrt();
        for i in 0..n {
            p_c[i] = (one - c_c) * p_c[i] + h_sigma * cc_norm * y_w[i];
        }

        let delta_h = (one - h_sigma) * c_c * (two - c_c);
        for i in 0..n {
            for j in 0..=i {
                let mut rank_mu = T::zero();
                for (w, (_, y, _)) in weights.iter().zip(&pop) {
                    rank_mu += *w * y[i] * y[j];
                }
                let v = (one - c_1 - c_mu) * cov[(i, j)]
                    + c_1 * (p_c[i] * p_c[j] + delta_h * cov[(i, j)])
                    + c_mu * rank_mu;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }

        sigma *= ((c_sigma / d_sigma) * (ps_norm / chi_n - one)).exp();
        sigma = sigma.min(T::lit(1e3) * sigma0);

        let (values, vectors) = symmetric_eigen(&cov);
        basis = vectors;
        let floor = T::epsilon() * T::lit(1e2);
        scales = values.iter().map(|&v| v.max(floor).sqrt()).collect();

        let max_scale = scales.iter().copied().fold(T::zero(), T::max);
        if sigma * max_scale < T::lit(1e-12) * diagonal || !sigma.is_finite() {
            break;
        }
    }
    Ok(best)
}
