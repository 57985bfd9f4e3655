//! Multi-fidelity Bayesian optimization by posterior regularization.
//!
//! A GP-UCB loop whose HF posterior is fused, pointwise, with the posterior
//! of a second GP trained on a fixed low-fidelity dataset. The fusion is a
//! weighted product of Gaussian experts; the LF weight is adapted online by
//! a forgetting step plus a Bayes update on improving observations.
//!
//! Modules:
//! * [`gp`]: GP regression, marginal likelihood, hyperparameter fitting
//! * [`fusion`]: POE / DW-POE fusion and the weight dynamics
//! * [`acquisition`]: UCB acquisitions and a box-constrained CMA-ES
//! * [`optimizers`]: GP-UCB, ABO, MFBO-I and MFBO-II loops
//! * [`benchmarks`]: the four HF/LF benchmark pairs and simple regret
//!
//! The numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

// `!(a > b)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod benchmarks;
pub mod error;
pub mod fusion;
pub mod gp;
pub mod linalg;
pub mod optimizers;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset = gp::Dataset<f64>;
pub type GpModel = gp::GpModel<f64>;
pub type GpHyperparams = gp::GpHyperparams<f64>;
pub type GaussianBelief = gp::GaussianBelief<f64>;
pub type FusedBelief = fusion::FusedBelief<f64>;
pub type WeightState = fusion::WeightState<f64>;
pub type BoxDomain = acquisition::BoxDomain<f64>;
pub type ObjectiveCase = benchmarks::ObjectiveCase<f64>;
pub type RunRecord = optimizers::RunRecord<f64>;
