//! Upper-confidence-bound acquisition and its inner-loop maximizer.

mod cmaes;

pub use cmaes::{maximize, maximize_with, CmaesConfig, Maximum};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::FusedBelief;
use crate::gp::GaussianBelief;
use crate::scalar::Real;

/// Exploration weight `√β_t` as a function of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSchedule {
    Constant { sqrt_beta: f64 },
    /// `√β_t = sqrt(2 log(d t² π² / (6 δ)))`.
    LogGrowth { delta: f64 },
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule::Constant { sqrt_beta: 2.0 }
    }
}

impl BetaSchedule {
    /// `√β_t` for iteration `t ≥ 1` in a `dim`-dimensional problem.
    pub fn sqrt_beta(&self, t: usize, dim: usize) -> f64 {
        match *self {
            BetaSchedule::Constant { sqrt_beta } => sqrt_beta,
            BetaSchedule::LogGrowth { delta } => {
                let t = t.max(1) as f64;
                let pi2 = std::f64::consts::PI * std::f64::consts::PI;
                (2.0 * (dim as f64 * t * t * pi2 / (6.0 * delta)).ln()).sqrt()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BetaSchedule::Constant { sqrt_beta } if !(sqrt_beta >= 0.0 && sqrt_beta.is_finite()) => {
                Err(Error::Domain(format!("sqrt_beta must be >= 0, got {sqrt_beta}")))
            }
            BetaSchedule::LogGrowth { delta } if !(delta > 0.0 && delta < 1.0) => {
                Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")))
            }
            _ => Ok(()),
        }
    }
}

/// Axis-aligned search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> BoxDomain<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::Domain("domain must have at least one dimension".into()));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::Domain(format!("invalid bounds [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi]^dim`.
    pub fn cube(lo: T, hi: T, dim: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn center(&self) -> Vec<T> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| (l + u) * T::lit(0.5))
            .collect()
    }

    /// Length of the box diagonal.
    pub fn diagonal(&self) -> T {
        crate::scalar::sq_dist(&self.lower, &self.upper).sqrt()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| v >= l && v <= u)
    }

    pub fn clip(&self, x: &mut [T]) {
        for (v, (&l, &u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.max(l).min(u);
        }
    }

    /// Maps a point of the unit cube onto the box.
    pub fn from_unit(&self, u: &[T]) -> Vec<T> {
        u.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&t, (&l, &h))| l + t * (h - l))
            .collect()
    }

    /// Uniform draw from the box.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        let u: Vec<T> = (0..self.dim()).map(|_| T::lit(rng.random::<f64>())).collect();
        self.from_unit(&u)
    }
}

/// `mean + √β · sd`.
#[inline]
pub fn ucb<T: Real>(belief: &GaussianBelief<T>, sqrt_beta: T) -> T {
    belief.mean + sqrt_beta * belief.sd
}

/// UCB of the regularized posterior.
#[inline]
pub fn regularized_ucb<T: Real>(fused: &FusedBelief<T>, sqrt_beta: T) -> T {
    fused.mean + sqrt_beta * fused.sd
}
