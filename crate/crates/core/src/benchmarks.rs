//! Benchmark objectives paired with cheap low-fidelity approximations.
//!
//! | name  | d | domain   | objective                          |
//! |-------|---|----------|------------------------------------|
//! | case1 | 1 | [0, 6]   | `2x^1.2 sin(2x) + 2`               |
//! | case2 | 2 | [0, 1]²  | Currin exponential                 |
//! | case3 | 4 | [0, 1]⁴  | Park function 1                    |
//! | case4 | 4 | [0, 1]⁴  | Park function 2                    |
//!
//! Reference optima were located with the dense-grid plus Nelder-Mead
//! polish in `examples/reference_optima.rs` and are frozen below.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::BoxDomain;
use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::optimizers::RunRecord;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

/// Below this the Currin `1 − exp(−1/(2x₂))` factor is evaluated at the clamp.
pub const CURRIN_X2_MIN: f64 = 1e-12;
/// Park 1 is evaluated at `x₁ = max(x₁, PARK1_X1_MIN)`.
pub const PARK1_X1_MIN: f64 = 1e-8;

pub const CASE1_X_STAR: [f64; 1] = [4.001_409_948_864_783];
pub const CASE1_F_STAR: f64 = 12.443_771_487_159_943;
pub const CASE2_X_STAR: [f64; 2] = [0.216_666_666_728_808_38, 0.0];
pub const CASE2_F_STAR: f64 = 13.798_722_044_728_438;
pub const CASE3_X_STAR: [f64; 4] = [1.0, 1.0, 1.0, 1.0];
pub const CASE3_F_STAR: f64 = 25.589_254_158_606_547;
pub const CASE4_X_STAR: [f64; 4] = [1.0, 1.0, 1.0, 0.0];
pub const CASE4_F_STAR: f64 = 5.926_037_399_287_1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseName {
    Case1,
    Case2,
    Case3,
    Case4,
}

impl CaseName {
    pub const ALL: [CaseName; 4] = [CaseName::Case1, CaseName::Case2, CaseName::Case3, CaseName::Case4];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseName::Case1 => "case1",
            CaseName::Case2 => "case2",
            CaseName::Case3 => "case3",
            CaseName::Case4 => "case4",
        }
    }
}

impl fmt::Display for CaseName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CaseName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCase(s.to_string()))
    }
}

/// Which transcription of the Currin low-fidelity model to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrinVariant {
    /// `B = f(x₁ + 0.05, max(0, x₂ + 0.05))`, as printed alongside the
    /// experiments.
    #[default]
    Printed,
    /// `B = f(x₁ + 0.05, max(0, x₂ − 0.05))`, the usual literature form.
    Corrected,
}

type Evaluator<T> = fn(&[T]) -> T;

/// A high/low-fidelity function pair on a box.
#[derive(Debug, Clone)]
pub struct ObjectiveCase<T> {
    pub name: CaseName,
    pub domain: BoxDomain<T>,
    hf: Evaluator<T>,
    lf: Evaluator<T>,
    /// Standard deviation of the Gaussian noise added to HF observations.
    pub noise_sd: T,
    pub f_star: T,
    pub x_star: Vec<T>,
}

impl<T: Real> ObjectiveCase<T> {
    pub fn new(name: CaseName, variant: CurrinVariant) -> Self {
        let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let (domain, hf, lf, f_star, x_star): (_, Evaluator<T>, Evaluator<T>, f64, Vec<T>) = match name {
            CaseName::Case1 => (
                BoxDomain::new(vec![T::zero()], vec![T::lit(6.0)]),
                case1_hf,
                case1_lf,
                CASE1_F_STAR,
                lit(&CASE1_X_STAR),
            ),
            CaseName::Case2 => (
                BoxDomain::cube(T::zero(), T::one(), 2),
                case2_hf,
                match variant {
                    CurrinVariant::Printed => case2_lf,
                    CurrinVariant::Corrected => case2_lf_corrected,
                },
                CASE2_F_STAR,
                lit(&CASE2_X_STAR),
            ),
            CaseName::Case3 => (
                BoxDomain::cube(T::zero(), T::one(), 4),
                case3_hf,
                case3_lf,
                CASE3_F_STAR,
                lit(&CASE3_X_STAR),
            ),
            CaseName::Case4 => (
                BoxDomain::cube(T::zero(), T::one(), 4),
                case4_hf,
                case4_lf,
                CASE4_F_STAR,
                lit(&CASE4_X_STAR),
            ),
        };
        Self {
            name,
            domain: domain.expect("static benchmark domain"),
            hf,
            lf,
            noise_sd: T::zero(),
            f_star: T::lit(f_star),
            x_star,
        }
    }

    /// Looks a case up by its registry name (`case1` … `case4`).
    pub fn by_name(name: &str, variant: CurrinVariant) -> Result<Self> {
        Ok(Self::new(name.parse()?, variant))
    }

    pub fn with_noise(mut self, noise_sd: T) -> Self {
        self.noise_sd = noise_sd;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn check(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!("{x:?} lies outside the {} domain", self.name)));
        }
        Ok(())
    }

    /// Noiseless objective value.
    pub fn hf(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        Ok((self.hf)(x))
    }

    /// Low-fidelity value.
    pub fn lf(&self, x: &[T]) -> Result<T> {
        self.check(x)?;
        Ok((self.lf)(x))
    }

    /// One noisy HF observation.
    pub fn observe<R: Rng + ?Sized>(&self, x: &[T], rng: &mut R) -> Result<(T, T)> {
        let f = self.hf(x)?;
        let eps: f64 = rng.sample(rand_distr::StandardNormal);
        Ok((f, f + self.noise_sd * T::lit(eps)))
    }
}

pub fn case1_hf<T: Real>(x: &[T]) -> T {
    let x = x[0];
    T::lit(2.0) * x.powf(T::lit(1.2)) * (T::lit(2.0) * x).sin() + T::lit(2.0)
}

pub fn case1_lf<T: Real>(x: &[T]) -> T {
    let f = case1_hf(x);
    let x = x[0];
    T::lit(0.7) * f + (x.powf(T::lit(1.3)) - T::lit(0.3)) * (T::lit(3.0) * x - T::lit(0.5)).sin()
        + T::lit(4.0) * (T::lit(2.0) * x).cos()
        - T::lit(5.0)
}

fn currin<T: Real>(x1: T, x2: T) -> T {
    let x2 = x2.max(T::lit(CURRIN_X2_MIN));
    let bracket = T::one() - (-T::one() / (T::lit(2.0) * x2)).exp();
    let num = T::lit(2300.0) * x1.powi(3) + T::lit(1900.0) * x1.powi(2) + T::lit(2092.0) * x1 + T::lit(60.0);
    let den = T::lit(100.0) * x1.powi(3) + T::lit(500.0) * x1.powi(2) + T::lit(4.0) * x1 + T::lit(20.0);
    bracket * num / den
}

pub fn case2_hf<T: Real>(x: &[T]) -> T {
    currin(x[0], x[1])
}

fn currin_lf<T: Real>(x: &[T], b_shift: T) -> T {
    let unit = |v: T| v.max(T::zero()).min(T::one());
    let d = T::lit(0.05);
    let (x1, x2) = (x[0], x[1]);
    let a = currin(unit(x1 + d), unit(x2 + d));
    let b = currin(unit(x1 + d), unit((x2 + b_shift).max(T::zero())));
    let c = currin(unit(x1 - d), unit(x2 + d));
    let dd = currin(unit(x1 - d), unit((x2 - d).max(T::zero())));
    (a + b + c + dd) / T::lit(4.0)
}

pub fn case2_lf<T: Real>(x: &[T]) -> T {
    currin_lf(x, T::lit(0.05))
}

pub fn case2_lf_corrected<T: Real>(x: &[T]) -> T {
    currin_lf(x, T::lit(-0.05))
}

pub fn case3_hf<T: Real>(x: &[T]) -> T {
    let x1 = x[0].max(T::lit(PARK1_X1_MIN));
    let (x2, x3, x4) = (x[1], x[2], x[3]);
    let q = (x2 + x3 * x3) * x4;
    // x₁/2 (√(1 + q/x₁²) − 1) rewritten as (√(x₁² + q) − x₁)/2
    let first = ((x1 * x1 + q).sqrt() - x1) * T::lit(0.5);
    first + (x1 + T::lit(3.0) * x4) * (T::one() + x3.sin()).exp()
}

pub fn case3_lf<T: Real>(x: &[T]) -> T {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    (T::one() + x1.sin() / T::lit(10.0)) * case3_hf(x) - T::lit(2.0) * x1 + x2 * x2 + x3 * x3 + T::lit(0.5)
}

pub fn case4_hf<T: Real>(x: &[T]) -> T {
    T::lit(2.0) / T::lit(3.0) * (x[0] + x[1]).exp() - x[3] * x[2].sin() + x[2]
}

pub fn case4_lf<T: Real>(x: &[T]) -> T {
    T::lit(1.2) * case4_hf(x) - T::one()
}

/// `count` uniform points from the case domain labelled with noiseless LF
/// values.
pub fn generate_lf_dataset<T: Real>(case: &ObjectiveCase<T>, count: usize, seed: u64) -> Result<Dataset<T>> {
    if count == 0 {
        return Err(Error::Domain("LF dataset size must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, Stream::LfData);
    let inputs: Vec<Vec<T>> = (0..count).map(|_| case.domain.sample(&mut rng)).collect();
    let outputs = inputs.iter().map(|x| (case.lf)(x)).collect();
    Dataset::new(inputs, outputs)
}

/// Running `min_i (f* − f(x_i))` over a sequence of noiseless values.
pub fn simple_regret_from_values<T: Real>(f_values: &[T], f_star: T) -> Vec<T> {
    let mut best = T::infinity();
    f_values
        .iter()
        .map(|&f| {
            best = best.min(f_star - f);
            best
        })
        .collect()
}

/// Simple regret trace of a run, computed on the noiseless objective values.
pub fn simple_regret<T: Real>(record: &RunRecord<T>, f_star: T) -> Vec<T> {
    simple_regret_from_values(&record.f_values, f_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case1_spot_values() {
        assert_eq!(case1_hf(&[0.0f64]), 2.0);
        assert!((case1_lf(&[0.0f64]) - 0.543_827_661_581_261).abs() < 1e-14);
    }

    #[test]
    fn case2_spot_values() {
        let bracket = 1.0 - (-0.5f64).exp();
        assert!((bracket - 0.393_469_340_287_366_6).abs() < 1e-15);
        // x₁ = 0 leaves 60/20 times the bracket
        assert!((case2_hf(&[0.0, 1.0]) - 3.0 * bracket).abs() < 1e-14);
        assert!((case2_hf(&[0.5f64, 0.5]) - 7.405_123_913_298_809).abs() < 1e-12);
    }

    #[test]
    fn case3_spot_values() {
        let e = std::f64::consts::E;
        // x₃ = 0 makes the second term (x₁ + 3x₄)·e
        let x = [0.4, 0.2, 0.0, 0.7];
        let first = 0.4 / 2.0 * ((1.0f64 + 0.2 * 0.7 / 0.16).sqrt() - 1.0);
        assert!((case3_hf(&x) - (first + (0.4 + 2.1) * e)).abs() < 1e-12);
        // x₁ → 0 limit of the first term is √(x₄(x₂ + x₃²))/2
        let at_zero = case3_hf(&[0.0, 1.0, 0.0, 1.0]) - 3.0 * e;
        assert!((at_zero - 0.5).abs() < 1e-7);
        let x = [0.0f64, 0.3, 0.6, 0.2];
        assert!((case3_lf(&x) - (case3_hf(&x) + 0.09 + 0.36 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn case4_spot_values() {
        assert_eq!(case4_hf(&[0.0f64, 0.0, 0.0, 0.37]), 2.0 / 3.0);
        assert!((case4_lf(&[0.0f64, 0.0, 0.0, 0.37]) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn case_registry() {
        for name in ["case1", "case2", "case3", "case4"] {
            let c = ObjectiveCase::<f64>::by_name(name, CurrinVariant::Printed).unwrap();
            assert_eq!(c.name.as_str(), name);
            assert!(c.domain.contains(&c.x_star));
            assert!((c.hf(&c.x_star).unwrap() - c.f_star).abs() < 1e-9);
        }
        assert!(matches!(
            ObjectiveCase::<f64>::by_name("case5", CurrinVariant::Printed),
            Err(Error::UnknownCase(_))
        ));
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let c = ObjectiveCase::<f64>::new(CaseName::Case1, CurrinVariant::Printed);
        assert!(c.hf(&[6.5]).is_err());
        assert!(c.lf(&[-0.1]).is_err());
        assert!(c.hf(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn lf_dataset_contract() {
        let c = ObjectiveCase::<f64>::new(CaseName::Case1, CurrinVariant::Printed);
        let d = generate_lf_dataset(&c, 3, 11).unwrap();
        assert_eq!(d.len(), 3);
        for (x, y) in d.inputs().iter().zip(d.outputs()) {
            assert!(c.domain.contains(x));
            assert_eq!(*y, case1_lf(x));
        }
        assert_eq!(d, generate_lf_dataset(&c, 3, 11).unwrap());
        assert!(generate_lf_dataset(&c, 0, 11).is_err());
    }

    #[test]
    fn regret_examples() {
        let r = simple_regret_from_values(&[1.0, 5.0, 3.0], 5.0);
        assert_eq!(r, vec![4.0, 0.0, 0.0]);
        assert_eq!(simple_regret_from_values(&[4.0], 5.0), vec![1.0]);
    }

    #[test]
    fn currin_variants_differ() {
        let x = [0.3, 0.5];
        assert_ne!(case2_lf(&x), case2_lf_corrected(&x));
    }
}
