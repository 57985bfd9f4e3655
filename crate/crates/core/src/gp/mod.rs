//! Gaussian-process regression with a squared-exponential kernel and a
//! constant prior mean.
//!
//! A [`GpModel`] holds the Cholesky factor of `K + (σ² + jitter) I` together
//! with the precomputed weight vector `(K + σ² I)⁻¹ (Y − m)`, so a prediction
//! costs one kernel row plus one triangular solve.

mod fit;
mod likelihood;

pub use fit::{fit_hyperparams, FitConfig, FitOutcome};
pub use likelihood::{log_marginal_likelihood, nlml_gradient, HyperGradient};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::{sq_dist, Real};

/// Jitter ladder relative to `kappa0`: `1e-10`, `1e-9`, ..., `1e-4`.
const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

/// Kernel and likelihood hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams<T> {
    /// Signal variance.
    pub kappa0: T,
    /// Bandwidth (length scale), shared by all input dimensions.
    pub h: T,
    /// Observation noise variance.
    pub noise_var: T,
    /// Constant prior mean.
    pub mean_const: T,
}

impl<T: Real> GpHyperparams<T> {
    pub fn new(kappa0: T, h: T, noise_var: T, mean_const: T) -> Result<Self> {
        let hp = Self {
            kappa0,
            h,
            noise_var,
            mean_const,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa0 > T::zero() && self.kappa0.is_finite()) {
            return Err(Error::Domain(format!("kappa0 must be > 0, got {}", self.kappa0)));
        }
        if !(self.h > T::zero() && self.h.is_finite()) {
            return Err(Error::Domain(format!("bandwidth must be > 0, got {}", self.h)));
        }
        if !(self.noise_var >= T::zero() && self.noise_var.is_finite()) {
            return Err(Error::Domain(format!(
                "noise variance must be >= 0, got {}",
                self.noise_var
            )));
        }
        if !self.mean_const.is_finite() {
            return Err(Error::Domain("mean constant must be finite".into()));
        }
        Ok(())
    }
}

/// Training inputs and scalar outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    inputs: Vec<Vec<T>>,
    outputs: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(inputs: Vec<Vec<T>>, outputs: Vec<T>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: outputs.len(),
            });
        }
        if let Some(first) = inputs.first() {
            let d = first.len();
            for x in &inputs {
                if x.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: x.len(),
                    });
                }
            }
        }
        Ok(Self { inputs, outputs })
    }

    pub fn empty() -> Self {
        Self {
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Appends one observation; the point must match the existing dimension.
    pub fn push(&mut self, x: Vec<T>, y: T) -> Result<()> {
        if let Some(d) = self.dim() {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: x.len(),
                });
            }
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[T] {
        &self.outputs
    }

    /// Largest observed output, `None` when empty.
    pub fn max_output(&self) -> Option<T> {
        self.outputs.iter().copied().reduce(T::max)
    }
}

/// Pointwise Gaussian posterior of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBelief<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Real> GaussianBelief<T> {
    pub fn new(mean: T, sd: T) -> Self {
        Self { mean, sd }
    }

    #[inline]
    pub fn variance(&self) -> T {
        self.sd * self.sd
    }

    /// `log N(y | mean, sd²)`.
    pub fn log_density(&self, y: T) -> T {
        let z = (y - self.mean) / self.sd;
        -T::lit(0.5) * z * z - self.sd.ln() - T::lit(0.5) * (T::PI() + T::PI()).ln()
    }
}

/// Squared-exponential kernel `κ₀ exp(−‖a − b‖² / (2h²))`.
pub fn kernel_eval<T: Real>(a: &[T], b: &[T], hyper: &GpHyperparams<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(se_kernel(a, b, hyper))
}

#[inline]
pub(crate) fn se_kernel<T: Real>(a: &[T], b: &[T], hyper: &GpHyperparams<T>) -> T {
    hyper.kappa0 * (-sq_dist(a, b) / (T::lit(2.0) * hyper.h * hyper.h)).exp()
}

/// Kernel Gram matrix without noise.
pub(crate) fn gram<T: Real>(inputs: &[Vec<T>], hyper: &GpHyperparams<T>) -> Matrix<T> {
    let n = inputs.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hyper.kappa0;
        for j in 0..i {
            let v = se_kernel(&inputs[i], &inputs[j], hyper);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cholesky factor of `K + (σ² + jitter) I`, escalating the jitter on failure.
/// Returns the factor and the absolute jitter that succeeded.
pub(crate) fn factorize<T: Real>(
    k: &Matrix<T>,
    hyper: &GpHyperparams<T>,
) -> Result<(Matrix<T>, T)> {
    let n = k.rows();
    let mut rel = JITTER_START;
    loop {
        let jitter = T::lit(rel) * hyper.kappa0;
        let mut a = k.clone();
        for i in 0..n {
            a[(i, i)] += hyper.noise_var + jitter;
        }
        let min_pivot = match linalg::cholesky(&a) {
            Ok(l) => return Ok((l, jitter)),
            Err(pivot) => pivot.to_f64().unwrap_or(f64::NAN),
        };
        if rel >= JITTER_MAX * 0.999 {
            return Err(Error::Factorization {
                size: n,
                jitter: jitter.as_f64(),
                min_pivot,
            });
        }
        rel *= 10.0;
    }
}

/// A GP conditioned on a dataset under fixed hyperparameters.
///
/// Immutable once built; share it freely across threads.
#[derive(Debug, Clone)]
pub struct GpModel<T> {
    hyper: GpHyperparams<T>,
    data: Dataset<T>,
    dim: usize,
    factor: Matrix<T>,
    alpha: Vec<T>,
    jitter: T,
}

impl<T: Real> GpModel<T> {
    /// Unconditioned prior over a `dim`-dimensional input space.
    pub fn prior(hyper: GpHyperparams<T>, dim: usize) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            hyper,
            data: Dataset::empty(),
            dim,
            factor: Matrix::zeros(0, 0),
            alpha: Vec::new(),
            jitter: T::zero(),
        })
    }

    pub fn hyper(&self) -> &GpHyperparams<T> {
        &self.hyper
    }

    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lower-triangular factor of `K + (σ² + jitter) I`.
    pub fn factor(&self) -> &Matrix<T> {
        &self.factor
    }

    /// Absolute diagonal jitter used by the factorization.
    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    /// Posterior mean and standard deviation at `x`.
    pub fn predict(&self, x: &[T]) -> Result<GaussianBelief<T>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[T]) -> GaussianBelief<T> {
        let hp = &self.hyper;
        if self.data.is_empty() {
            return GaussianBelief::new(hp.mean_const, hp.kappa0.sqrt());
        }
        let k: Vec<T> = self
            .data
            .inputs()
            .iter()
            .map(|xi| se_kernel(x, xi, hp))
            .collect();
        let mean = hp.mean_const + crate::scalar::dot(&k, &self.alpha);
        let v = linalg::solve_lower(&self.factor, &k);
        let var = (hp.kappa0 - crate::scalar::dot(&v, &v)).max(T::zero());
        GaussianBelief::new(mean, var.sqrt())
    }
}

/// Conditions the GP prior on `data`.
pub fn fit_posterior<T: Real>(data: &Dataset<T>, hyper: GpHyperparams<T>) -> Result<GpModel<T>> {
    hyper.validate()?;
    let dim = data.dim().ok_or(Error::EmptyDataset)?;
    let k = gram(data.inputs(), &hyper);
    let (factor, jitter) = factorize(&k, &hyper)?;
    let centered: Vec<T> = data.outputs().iter().map(|&y| y - hyper.mean_const).collect();
    let alpha = linalg::cholesky_solve(&factor, &centered);
    Ok(GpModel {
        hyper,
        data: data.clone(),
        dim,
        factor,
        alpha,
        jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(kappa0: f64, h: f64, noise: f64, mean: f64) -> GpHyperparams<f64> {
        GpHyperparams::new(kappa0, h, noise, mean).unwrap()
    }

    #[test]
    fn kernel_values() {
        let p = hp(2.5, 1.3, 0.0, 0.0);
        assert_eq!(kernel_eval(&[0.4, 0.1], &[0.4, 0.1], &p).unwrap(), 2.5);
        let p = hp(1.0, 0.7, 0.0, 0.0);
        let v = kernel_eval(&[0.0], &[0.7], &p).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        let p = hp(1.0, 5.0, 0.0, 0.0);
        let v = kernel_eval(&[0.0, 0.0], &[3.0, 4.0], &p).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        let a = [0.3, -1.0];
        let b = [1.1, 0.25];
        assert_eq!(kernel_eval(&a, &b, &p).unwrap(), kernel_eval(&b, &a, &p).unwrap());
    }

    #[test]
    fn kernel_dimension_mismatch() {
        let p = hp(1.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            kernel_eval(&[0.0], &[0.0, 1.0], &p),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_hyperparams_rejected() {
        assert!(GpHyperparams::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(GpHyperparams::new(1.0, -1.0, 0.0, 0.0).is_err());
        assert!(GpHyperparams::new(1.0, 1.0, -1e-3, 0.0).is_err());
    }

    #[test]
    fn single_noiseless_point_interpolates() {
        let data = Dataset::new(vec![vec![0.3]], vec![1.7]).unwrap();
        let m = fit_posterior(&data, hp(1.0, 0.5, 0.0, 0.0)).unwrap();
        let b = m.predict(&[0.3]).unwrap();
        assert!((b.mean - 1.7).abs() < 1e-9);
        assert!(b.sd < 1e-4);
    }

    #[test]
    fn single_noisy_point_halves() {
        let data = Dataset::new(vec![vec![0.3]], vec![1.7]).unwrap();
        let m = fit_posterior(&data, hp(1.0, 0.5, 1.0, 0.0)).unwrap();
        let b = m.predict(&[0.3]).unwrap();
        assert!((b.mean - 0.85).abs() < 1e-9);
    }

    #[test]
    fn prior_model_predicts_prior() {
        let m = GpModel::prior(hp(4.0, 0.5, 0.1, -1.0), 2).unwrap();
        let b = m.predict(&[0.1, 0.2]).unwrap();
        assert_eq!(b, GaussianBelief::new(-1.0, 2.0));
    }

    #[test]
    fn far_query_recovers_prior() {
        let data = Dataset::new(vec![vec![0.0], vec![0.2]], vec![1.0, -1.0]).unwrap();
        let m = fit_posterior(&data, hp(2.0, 0.1, 0.01, 0.5)).unwrap();
        let b = m.predict(&[100.0]).unwrap();
        assert!((b.mean - 0.5).abs() < 1e-12);
        assert!((b.sd - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn noisy_training_point_sd_is_interior() {
        let data = Dataset::new(vec![vec![0.0], vec![0.5]], vec![1.0, 0.0]).unwrap();
        let m = fit_posterior(&data, hp(1.0, 0.3, 0.05, 0.0)).unwrap();
        let b = m.predict(&[0.0]).unwrap();
        assert!(b.sd > 0.0 && b.sd < 1.0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert_eq!(
            fit_posterior(&Dataset::<f64>::empty(), hp(1.0, 1.0, 0.0, 0.0)).unwrap_err(),
            Error::EmptyDataset
        );
    }

    #[test]
    fn duplicate_points_trigger_jitter() {
        let data = Dataset::new(vec![vec![0.5]; 4], vec![1.0; 4]).unwrap();
        let m = fit_posterior(&data, hp(1.0, 1.0, 0.0, 0.0)).unwrap();
        assert!(m.jitter() > 0.0);
        let l = m.factor();
        let rec = l.matmul(&l.transpose());
        let mut k = gram(data.inputs(), m.hyper());
        for i in 0..4 {
            k[(i, i)] += m.jitter();
        }
        assert!(rec.max_abs_diff(&k) < 1e-8);
    }

    #[test]
    fn dataset_rejects_ragged_inputs() {
        assert!(Dataset::new(vec![vec![0.0], vec![0.0, 1.0]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(vec![vec![0.0]], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn f32_prediction_works() {
        let data = Dataset::new(vec![vec![0.0f32], vec![1.0]], vec![0.0, 1.0]).unwrap();
        let m = fit_posterior(&data, GpHyperparams::new(1.0f32, 0.5, 1e-4, 0.0).unwrap()).unwrap();
        let b = m.predict(&[1.0]).unwrap();
        assert!((b.mean - 1.0).abs() < 1e-2);
    }
}
