//! Product-of-experts fusion of Gaussian beliefs and the adaptive weighting
//! of the low-fidelity expert.
//!
//! The regularized posterior is `p_hf^(1 − w) · p_lf^w` (renormalized), which
//! for Gaussians is again Gaussian with precision `(1 − w)/σ_hf² + w/σ_lf²`.
//! The weight `w` starts at 0.5, is pulled back toward 0.5 by the forgetting
//! factor every iteration, and is moved by a Bayes update whenever a new
//! observation beats the incumbent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GaussianBelief;
use crate::scalar::Real;

/// Log-likelihood below which an observation is treated as impossible.
const LOG_LIKELIHOOD_FLOOR: f64 = -700.0;

/// Low-fidelity expert weight and forgetting factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightState<T> {
    pub w_lf: T,
    pub alpha: T,
}

impl<T: Real> WeightState<T> {
    /// Requires `0 ≤ w_lf < 1` and `0 < alpha ≤ 1`.
    pub fn new(w_lf: T, alpha: T) -> Result<Self> {
        if !(w_lf >= T::zero() && w_lf < T::one()) {
            return Err(Error::Domain(format!("w_lf must lie in [0, 1), got {w_lf}")));
        }
        if !(alpha > T::zero() && alpha <= T::one()) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self { w_lf, alpha })
    }

    /// Weight of the high-fidelity expert, `1 − w_lf`.
    pub fn w_hf(&self) -> T {
        T::one() - self.w_lf
    }
}

impl<T: Real> Default for WeightState<T> {
    fn default() -> Self {
        initial_weight()
    }
}

/// Weight `0.5`, forgetting factor `0.9`.
pub fn initial_weight<T: Real>() -> WeightState<T> {
    WeightState {
        w_lf: T::lit(0.5),
        alpha: T::lit(0.9),
    }
}

/// Regularized posterior produced by [`dwpoe_fuse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusedBelief<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Real> From<GaussianBelief<T>> for FusedBelief<T> {
    fn from(b: GaussianBelief<T>) -> Self {
        Self { mean: b.mean, sd: b.sd }
    }
}

impl<T: Real> From<FusedBelief<T>> for GaussianBelief<T> {
    fn from(b: FusedBelief<T>) -> Self {
        Self { mean: b.mean, sd: b.sd }
    }
}

fn check_sd<T: Real>(b: &GaussianBelief<T>) -> Result<()> {
    if b.sd > T::zero() && b.sd.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("expert sd must be positive and finite, got {}", b.sd)))
    }
}

/// Plain product of Gaussian experts: precisions add, means are
/// precision-weighted.
pub fn poe_fuse<T: Real>(beliefs: &[GaussianBelief<T>]) -> Result<GaussianBelief<T>> {
    if beliefs.is_empty() {
        return Err(Error::Domain("poe_fuse needs at least one expert".into()));
    }
    let mut precision = T::zero();
    let mut weighted = T::zero();
    for b in beliefs {
        check_sd(b)?;
        let p = T::one() / b.variance();
        precision += p;
        weighted += b.mean * p;
    }
    Ok(GaussianBelief::new(weighted / precision, (T::one() / precision).sqrt()))
}

/// Dynamically weighted product of the HF and LF experts.
///
/// `w_lf = 0` returns the HF belief bit for bit.
pub fn dwpoe_fuse<T: Real>(
    hf: &GaussianBelief<T>,
    lf: &GaussianBelief<T>,
    w_lf: T,
) -> Result<FusedBelief<T>> {
    check_sd(hf)?;
    check_sd(lf)?;
    if !(w_lf >= T::zero() && w_lf < T::one()) {
        return Err(Error::Domain(format!("w_lf must lie in [0, 1), got {w_lf}")));
    }
    if w_lf == T::zero() {
        return Ok((*hf).into());
    }
    let p1 = (T::one() - w_lf) / hf.variance();
    let p2 = w_lf / lf.variance();
    let total = p1 + p2;
    if !(total > T::zero()) {
        return Err(Error::Domain("both weighted precisions vanish".into()));
    }
    Ok(FusedBelief {
        mean: (hf.mean * p1 + lf.mean * p2) / total,
        sd: (T::one() / total).sqrt(),
    })
}

/// Forgetting step `ŵ = w^α / (w^α + (1 − w)^α)`.
pub fn weight_predict<T: Real>(state: &WeightState<T>) -> T {
    let w = state.w_lf;
    if w == T::zero() {
        return T::zero();
    }
    let a = w.powf(state.alpha);
    let b = (T::one() - w).powf(state.alpha);
    a / (a + b)
}

/// Forgetting step followed, on an improving observation, by a Bayes update
/// comparing how well each expert predicted `y_new`.
pub fn weight_update<T: Real>(
    state: &WeightState<T>,
    y_new: T,
    y_best_so_far: T,
    lf_pred: &GaussianBelief<T>,
    hf_pred: &GaussianBelief<T>,
) -> WeightState<T> {
    let w_hat = weight_predict(state);
    let next = |w_lf| WeightState {
        w_lf,
        alpha: state.alpha,
    };
    if !(y_new > y_best_so_far) || w_hat == T::zero() {
        return next(w_hat);
    }
    let ll_lf = lf_pred.log_density(y_new);
    let ll_hf = hf_pred.log_density(y_new);
    let floor = T::lit(LOG_LIKELIHOOD_FLOOR);
    let finite = ll_lf.is_finite() || ll_hf.is_finite();
    if !finite || (ll_lf < floor && ll_hf < floor) {
        return next(w_hat);
    }
    // posterior odds in log space: logit w' = logit ŵ + log l_lf − log l_hf
    let log_odds = (w_hat.ln() + ll_lf) - ((T::one() - w_hat).ln() + ll_hf);
    let w = if log_odds >= T::zero() {
        T::one() / (T::one() + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (T::one() + e)
    };
    // keep the state inside [0, 1)
    let w = if w >= T::one() { T::one() - T::epsilon() } else { w };
    next(w)
}
