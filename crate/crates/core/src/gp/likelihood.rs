//! Marginal likelihood of the training outputs and its analytic gradient
//! with respect to the log-space hyperparameters.

use serde::{Deserialize, Serialize};

use super::{factorize, gram, Dataset, GpHyperparams};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{dot, sq_dist, Real};

/// Gradient of the negative log marginal likelihood with respect to
/// `(log κ₀, log h, log σ², mean_const)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperGradient<T> {
    pub log_kappa0: T,
    pub log_h: T,
    pub log_noise_var: T,
    pub mean_const: T,
}

impl<T: Real> HyperGradient<T> {
    pub fn to_array(self) -> [T; 4] {
        [self.log_kappa0, self.log_h, self.log_noise_var, self.mean_const]
    }

    pub fn norm(&self) -> T {
        self.to_array().iter().map(|&g| g * g).sum::<T>().sqrt()
    }
}

/// `log N(Y | m·1, K + σ² I)`.
pub fn log_marginal_likelihood<T: Real>(data: &Dataset<T>, hyper: &GpHyperparams<T>) -> Result<T> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let k = gram(data.inputs(), hyper);
    let (l, _) = factorize(&k, hyper)?;
    let r: Vec<T> = data.outputs().iter().map(|&y| y - hyper.mean_const).collect();
    let alpha = linalg::cholesky_solve(&l, &r);
    let n = T::from_usize_lossy(data.len());
    let half = T::lit(0.5);
    Ok(-half * dot(&r, &alpha)
        - half * linalg::cholesky_log_det(&l)
        - half * n * (T::PI() + T::PI()).ln())
}

/// NLML value together with its gradient; the value is returned so the
/// hyperparameter search needs a single factorization per evaluation.
pub(crate) fn nlml_and_gradient<T: Real>(
    data: &Dataset<T>,
    hyper: &GpHyperparams<T>,
) -> Result<(T, HyperGradient<T>)> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let inputs = data.inputs();
    let n = data.len();
    let k = gram(inputs, hyper);
    let (l, jitter) = factorize(&k, hyper)?;
    let r: Vec<T> = data.outputs().iter().map(|&y| y - hyper.mean_const).collect();
    let alpha = linalg::cholesky_solve(&l, &r);
    let inv = linalg::cholesky_inverse(&l);

    let half = T::lit(0.5);
    let nlml = half * dot(&r, &alpha)
        + half * linalg::cholesky_log_det(&l)
        + half * T::from_usize_lossy(n) * (T::PI() + T::PI()).ln();

    // dNLML/dθ = ½ tr((A⁻¹ − ααᵀ) ∂A/∂θ)
    let inv_h2 = T::one() / (hyper.h * hyper.h);
    let mut g_kappa = T::zero();
    let mut g_h = T::zero();
    let mut trace_w = T::zero();
    for i in 0..n {
        for j in 0..n {
            let w = inv[(i, j)] - alpha[i] * alpha[j];
            let kij = k[(i, j)];
            g_kappa += w * kij;
            if i != j {
                g_h += w * kij * sq_dist(&inputs[i], &inputs[j]) * inv_h2;
            }
        }
        trace_w += inv[(i, i)] - alpha[i] * alpha[i];
    }
    // the jitter scales with κ₀, so it contributes to the κ₀ derivative
    g_kappa += jitter * trace_w;

    let grad = HyperGradient {
        log_kappa0: half * g_kappa,
        log_h: half * g_h,
        log_noise_var: half * hyper.noise_var * trace_w,
        mean_const: -alpha.iter().copied().sum::<T>(),
    };
    Ok((nlml, grad))
}

/// Analytic gradient of the negative log marginal likelihood.
pub fn nlml_gradient<T: Real>(data: &Dataset<T>, hyper: &GpHyperparams<T>) -> Result<HyperGradient<T>> {
    nlml_and_gradient(data, hyper).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_standard_normal() {
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        let hp = GpHyperparams::new(0.6, 1.0, 0.4, 0.0).unwrap();
        let d0 = Dataset::new(vec![vec![0.0]], vec![0.0]).unwrap();
        let v = log_marginal_likelihood(&d0, &hp).unwrap();
        assert!((v + 0.5 * ln2pi).abs() < 1e-9);
        let d1 = Dataset::new(vec![vec![0.0]], vec![1.0]).unwrap();
        let v = log_marginal_likelihood(&d1, &hp).unwrap();
        assert!((v + 0.5 * ln2pi + 0.5).abs() < 1e-9);
    }

    #[test]
    fn mean_gradient_vanishes_at_gls_mean() {
        // c* = 1ᵀA⁻¹Y / 1ᵀA⁻¹1 zeroes 1ᵀA⁻¹(Y − c1)
        let data = Dataset::new(
            vec![vec![0.0], vec![0.3], vec![0.9], vec![1.4]],
            vec![1.0, 2.5, -0.5, 0.7],
        )
        .unwrap();
        let hp = GpHyperparams::new(1.5f64, 0.4, 0.05, 0.0).unwrap();
        let k = gram(data.inputs(), &hp);
        let (l, _) = factorize(&k, &hp).unwrap();
        let ones = vec![1.0; 4];
        let a1 = linalg::cholesky_solve(&l, &ones);
        let c = dot(&a1, data.outputs()) / dot(&a1, &ones);
        let hp = GpHyperparams { mean_const: c, ..hp };
        let g = nlml_gradient(&data, &hp).unwrap();
        assert!(g.mean_const.abs() < 1e-10);
    }

    #[test]
    fn empty_data_errors() {
        let hp = GpHyperparams::new(1.0, 1.0, 0.1, 0.0).unwrap();
        assert!(log_marginal_likelihood(&Dataset::<f64>::empty(), &hp).is_err());
    }
}
