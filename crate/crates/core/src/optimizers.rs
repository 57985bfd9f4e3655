//! Bayesian-optimization loops: GP-UCB, ABO (posterior regularization with
//! an adaptively weighted low-fidelity GP), and the two multi-fidelity
//! baselines MFBO-I (LF warm start) and MFBO-II (min of HF and shifted LF
//! UCBs).
//!
//! All four share one driver, [`Session`], parameterized by a [`Policy`]
//! that scores candidate points and reacts to new observations.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{maximize_with, regularized_ucb, ucb, BetaSchedule, CmaesConfig};
use crate::benchmarks::ObjectiveCase;
use crate::error::{Error, Result};
use crate::fusion::{dwpoe_fuse, weight_update, WeightState};
use crate::gp::{fit_hyperparams, fit_posterior, Dataset, FitConfig, GaussianBelief, GpHyperparams, GpModel};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

/// Relative floor applied to predicted standard deviations before fusion.
const SD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GpUcb,
    Abo,
    Mfbo1,
    Mfbo2,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::GpUcb, Algorithm::Abo, Algorithm::Mfbo1, Algorithm::Mfbo2];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::GpUcb => "gp_ucb",
            Algorithm::Abo => "abo",
            Algorithm::Mfbo1 => "mfbo1",
            Algorithm::Mfbo2 => "mfbo2",
        }
    }

    pub fn uses_lf_data(self) -> bool {
        !matches!(self, Algorithm::GpUcb)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown algorithm `{s}` (valid: gp_ucb, abo, mfbo1, mfbo2)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AboConfig {
    pub w_lf_init: f64,
    pub alpha: f64,
    /// When false the weight is frozen at `w_lf_init`.
    pub adapt_weight: bool,
}

impl Default for AboConfig {
    fn default() -> Self {
        Self {
            w_lf_init: 0.5,
            alpha: 0.9,
            adapt_weight: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mfbo2Config {
    /// Bias bound ζ; `None` uses the sample sd of the LF outputs.
    pub zeta: Option<f64>,
}

/// Settings shared by every loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Total HF evaluations, initial design included.
    pub budget: usize,
    pub n_init: usize,
    pub beta: BetaSchedule,
    /// Refit HF hyperparameters every `refit_every` iterations; `0` fits once.
    pub refit_every: usize,
    pub seed: u64,
    /// Hyperparameter search settings; `None` derives them from the domain.
    pub fit: Option<FitConfig>,
    /// CMA-ES evaluations per acquisition search; `None` means `100 λ`.
    pub acquisition_budget: Option<usize>,
    pub abo: AboConfig,
    pub mfbo2: Mfbo2Config,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            budget: 20,
            n_init: 2,
            beta: BetaSchedule::default(),
            refit_every: 1,
            seed: 0,
            fit: None,
            acquisition_budget: None,
            abo: AboConfig::default(),
            mfbo2: Mfbo2Config::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init < 1 || self.budget < self.n_init {
            return Err(Error::Domain(format!(
                "need budget >= n_init >= 1 (budget {}, n_init {})",
                self.budget, self.n_init
            )));
        }
        self.beta.validate()?;
        WeightState::new(self.abo.w_lf_init, self.abo.alpha)?;
        if let Some(z) = self.mfbo2.zeta {
            if !(z >= 0.0) {
                return Err(Error::Domain(format!("zeta must be >= 0, got {z}")));
            }
        }
        Ok(())
    }

    fn fit_config<T: Real>(&self, case: &ObjectiveCase<T>) -> FitConfig {
        self.fit
            .unwrap_or_else(|| FitConfig::for_diagonal(case.domain.diagonal().as_f64()))
    }

    fn cmaes_config(&self, dim: usize) -> CmaesConfig {
        match self.acquisition_budget {
            Some(b) => CmaesConfig::with_budget(b),
            None => CmaesConfig::for_dim(dim),
        }
    }
}

/// Everything observed during one run. Per-evaluation vectors all have
/// length `budget`; index `i` is the `(i+1)`-th HF evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord<T> {
    pub algorithm: Algorithm,
    pub case: String,
    pub seed: u64,
    pub n_init: usize,
    pub xs: Vec<Vec<T>>,
    /// Observations, noise included.
    pub ys: Vec<T>,
    /// Noiseless objective values at `xs`.
    pub f_values: Vec<T>,
    /// Running max of `ys`.
    pub incumbent: Vec<T>,
    /// LF weight after each evaluation; ABO only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_lf: Option<Vec<T>>,
    /// Wall-clock seconds per evaluation (zero for the initial design).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iter_seconds: Vec<f64>,
    /// Iterations where hyperparameter fitting or factorization failed.
    pub fit_failures: usize,
}

impl<T: Real> RunRecord<T> {
    /// Equality ignoring wall-clock timings.
    pub fn same_trajectory(&self, other: &Self) -> bool {
        self.algorithm == other.algorithm
            && self.xs == other.xs
            && self.ys == other.ys
            && self.f_values == other.f_values
            && self.incumbent == other.incumbent
            && self.w_lf == other.w_lf
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }
}

/// Scores candidates for one algorithm.
pub trait Policy<T: Real> {
    fn algorithm(&self) -> Algorithm;

    /// Acquisition value at `x` under the current HF posterior.
    fn acquisition(&self, hf: &GpModel<T>, x: &[T], sqrt_beta: T) -> T;

    /// Sees each new observation together with the HF model that chose `x`.
    fn observe(&mut self, _hf: &GpModel<T>, _x: &[T], _y: T, _best_before: T) {}

    fn w_lf(&self) -> Option<T> {
        None
    }
}

/// Plain UCB on the HF posterior.
#[derive(Debug, Clone, Default)]
pub struct GpUcbPolicy;

impl<T: Real> Policy<T> for GpUcbPolicy {
    fn algorithm(&self) -> Algorithm {
        Algorithm::GpUcb
    }

    fn acquisition(&self, hf: &GpModel<T>, x: &[T], sqrt_beta: T) -> T {
        ucb(&hf.predict_unchecked(x), sqrt_beta)
    }
}

/// UCB of the DW-POE regularized posterior with Bayesian weight adaptation.
#[derive(Debug, Clone)]
pub struct AboPolicy<T> {
    lf: GpModel<T>,
    state: WeightState<T>,
    adapt: bool,
}

impl<T: Real> AboPolicy<T> {
    pub fn new(lf: GpModel<T>, state: WeightState<T>, adapt: bool) -> Self {
        Self { lf, state, adapt }
    }

    pub fn state(&self) -> &WeightState<T> {
        &self.state
    }

    /// Regularized posterior at `x`.
    pub fn regularized(&self, hf: &GpModel<T>, x: &[T]) -> (GaussianBelief<T>, GaussianBelief<T>, GaussianBelief<T>) {
        let h = floor_sd(hf.predict_unchecked(x), hf);
        let l = floor_sd(self.lf.predict_unchecked(x), &self.lf);
        let fused = dwpoe_fuse(&h, &l, self.state.w_lf).map(Into::into).unwrap_or(h);
        (h, l, fused)
    }
}

fn floor_sd<T: Real>(b: GaussianBelief<T>, model: &GpModel<T>) -> GaussianBelief<T> {
    let floor = T::lit(SD_FLOOR) * model.hyper().kappa0.sqrt();
    GaussianBelief::new(b.mean, b.sd.max(floor))
}

impl<T: Real> Policy<T> for AboPolicy<T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Abo
    }

    fn acquisition(&self, hf: &GpModel<T>, x: &[T], sqrt_beta: T) -> T {
        if self.state.w_lf == T::zero() {
            return ucb(&hf.predict_unchecked(x), sqrt_beta);
        }
        let (_, _, fused) = self.regularized(hf, x);
        regularized_ucb(&fused.into(), sqrt_beta)
    }

    fn observe(&mut self, hf: &GpModel<T>, x: &[T], y: T, best_before: T) {
        if !self.adapt {
            return;
        }
        let h = floor_sd(hf.predict_unchecked(x), hf);
        let l = floor_sd(self.lf.predict_unchecked(x), &self.lf);
        self.state = weight_update(&self.state, y, best_before, &l, &h);
    }

    fn w_lf(&self) -> Option<T> {
        Some(self.state.w_lf)
    }
}

/// `min(UCB_hf, UCB_lf + ζ)`.
#[derive(Debug, Clone)]
pub struct Mfbo2Policy<T> {
    lf: GpModel<T>,
    zeta: T,
}

impl<T: Real> Mfbo2Policy<T> {
    pub fn new(lf: GpModel<T>, zeta: T) -> Self {
        Self { lf, zeta }
    }
}

impl<T: Real> Policy<T> for Mfbo2Policy<T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Mfbo2
    }

    fn acquisition(&self, hf: &GpModel<T>, x: &[T], sqrt_beta: T) -> T {
        let hf_ucb = ucb(&hf.predict_unchecked(x), sqrt_beta);
        let lf_ucb = ucb(&self.lf.predict_unchecked(x), sqrt_beta) + self.zeta;
        hf_ucb.min(lf_ucb)
    }
}

/// Starting hyperparameters derived from the data scale.
pub fn initial_hyper<T: Real>(data: &Dataset<T>, domain_diagonal: T) -> GpHyperparams<T> {
    let ys = data.outputs();
    let n = T::from_usize_lossy(ys.len().max(1));
    let mean = ys.iter().copied().sum::<T>() / n;
    let var = if ys.len() > 1 {
        ys.iter().map(|&y| (y - mean) * (y - mean)).sum::<T>() / (n - T::one())
    } else {
        T::one()
    };
    let kappa0 = var.max(T::lit((-6.0f64).exp())).min(T::lit(6.0f64.exp()));
    GpHyperparams {
        kappa0,
        h: T::lit(0.2) * domain_diagonal,
        noise_var: T::lit(1e-6) * kappa0,
        mean_const: mean,
    }
}

/// Fits a GP (hyperparameters and posterior) to the LF data once.
pub fn fit_lf_model<T: Real>(case: &ObjectiveCase<T>, lf_data: &Dataset<T>, config: &RunConfig) -> Result<GpModel<T>> {
    if lf_data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = stream_rng(config.seed, Stream::LfHyperFit);
    let init = initial_hyper(lf_data, case.domain.diagonal());
    let out = fit_hyperparams(lf_data, &init, &config.fit_config(case), &mut rng);
    fit_posterior(lf_data, out.hyper).or_else(|_| fit_posterior(lf_data, init))
}

/// The `n_init` uniform initial design points of a run.
pub fn initial_design<T: Real>(case: &ObjectiveCase<T>, config: &RunConfig) -> Vec<Vec<T>> {
    let mut rng = stream_rng(config.seed, Stream::InitialDesign);
    (0..config.n_init).map(|_| case.domain.sample(&mut rng)).collect()
}

/// Per-step summary returned by [`Session::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Step<T> {
    pub x: Vec<T>,
    pub y: T,
    pub acquisition_value: T,
}

/// One optimization run advanced one HF evaluation at a time.
pub struct Session<'a, T: Real, P> {
    case: &'a ObjectiveCase<T>,
    config: RunConfig,
    policy: P,
    data: Dataset<T>,
    hyper: GpHyperparams<T>,
    fit_cfg: FitConfig,
    cmaes: CmaesConfig,
    acq_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    fit_rng: ChaCha8Rng,
    record: RunRecord<T>,
    iteration: usize,
}

impl<'a, T: Real, P: Policy<T>> Session<'a, T, P> {
    /// Evaluates `design` and prepares the loop.
    pub fn new(case: &'a ObjectiveCase<T>, config: &RunConfig, design: Vec<Vec<T>>, policy: P) -> Result<Self> {
        config.validate()?;
        if design.is_empty() || design.len() > config.budget {
            return Err(Error::Domain(format!(
                "initial design size {} must lie in [1, budget]",
                design.len()
            )));
        }
        let mut noise_rng = stream_rng(config.seed, Stream::ObservationNoise);
        let mut record = RunRecord {
            algorithm: policy.algorithm(),
            case: case.name.to_string(),
            seed: config.seed,
            n_init: design.len(),
            xs: Vec::with_capacity(config.budget),
            ys: Vec::with_capacity(config.budget),
            f_values: Vec::with_capacity(config.budget),
            incumbent: Vec::with_capacity(config.budget),
            w_lf: policy.w_lf().map(|_| Vec::with_capacity(config.budget)),
            iter_seconds: Vec::with_capacity(config.budget),
            fit_failures: 0,
        };
        let mut data = Dataset::empty();
        for x in design {
            let (f, y) = case.observe(&x, &mut noise_rng)?;
            Self::push_record(&mut record, &policy, &x, y, f, 0.0);
            data.push(x, y)?;
        }
        let hyper = initial_hyper(&data, case.domain.diagonal());
        Ok(Self {
            case,
            fit_cfg: config.fit_config(case),
            cmaes: config.cmaes_config(case.dim()),
            config: config.clone(),
            policy,
            data,
            hyper,
            acq_rng: stream_rng(config.seed, Stream::Acquisition),
            noise_rng,
            fit_rng: stream_rng(config.seed, Stream::HfHyperFit),
            record,
            iteration: 0,
        })
    }

    fn push_record(record: &mut RunRecord<T>, policy: &P, x: &[T], y: T, f: T, secs: f64) {
        let best = record.incumbent.last().map_or(y, |&b| b.max(y));
        record.xs.push(x.to_vec());
        record.ys.push(y);
        record.f_values.push(f);
        record.incumbent.push(best);
        if let (Some(trace), Some(w)) = (record.w_lf.as_mut(), policy.w_lf()) {
            trace.push(w);
        }
        record.iter_seconds.push(secs);
    }

    pub fn is_done(&self) -> bool {
        self.data.len() >= self.config.budget
    }

    pub fn data(&self) -> &Dataset<T> {
        &self.data
    }

    pub fn policy(&self) -> &P {
        &self.policy
    }

    /// Current HF model, refitting hyperparameters when due.
    fn hf_model(&mut self) -> Result<GpModel<T>> {
        let refit = match self.config.refit_every {
            0 => self.iteration == 0,
            k => self.iteration.is_multiple_of(k),
        };
        if refit {
            let out = fit_hyperparams(&self.data, &self.hyper, &self.fit_cfg, &mut self.fit_rng);
            if out.warning {
                self.record.fit_failures += 1;
            } else {
                self.hyper = out.hyper;
            }
        }
        match fit_posterior(&self.data, self.hyper) {
            Ok(m) => Ok(m),
            Err(e) => {
                log::warn!("HF posterior failed ({e}); falling back to data-scale hyperparameters");
                self.record.fit_failures += 1;
                self.hyper = initial_hyper(&self.data, self.case.domain.diagonal());
                fit_posterior(&self.data, self.hyper)
            }
        }
    }

    /// Runs one BO iteration; `None` once the budget is spent.
    pub fn step(&mut self) -> Result<Option<Step<T>>> {
        if self.is_done() {
            return Ok(None);
        }
        let start = Instant::now();
        let model = self.hf_model()?;
        let sqrt_beta = T::lit(self.config.beta.sqrt_beta(self.data.len(), self.case.dim()));
        let policy = &self.policy;
        let best = maximize_with(
            |x: &[T]| policy.acquisition(&model, x, sqrt_beta),
            &self.case.domain,
            &self.cmaes,
            &mut self.acq_rng,
        )?;
        let x = best.point;
        let (f, y) = self.case.observe(&x, &mut self.noise_rng)?;
        let best_before = self.data.max_output().unwrap_or(T::neg_infinity());
        self.policy.observe(&model, &x, y, best_before);
        self.data.push(x.clone(), y)?;
        self.iteration += 1;
        let secs = start.elapsed().as_secs_f64();
        Self::push_record(&mut self.record, &self.policy, &x, y, f, secs);
        Ok(Some(Step {
            x,
            y,
            acquisition_value: best.value,
        }))
    }

    pub fn run_to_end(mut self) -> Result<RunRecord<T>> {
        while self.step()?.is_some() {}
        Ok(self.record)
    }
}

/// Plain GP-UCB from a random initial design.
pub fn run_gp_ucb<T: Real>(case: &ObjectiveCase<T>, config: &RunConfig) -> Result<RunRecord<T>> {
    Session::new(case, config, initial_design(case, config), GpUcbPolicy)?.run_to_end()
}

/// ABO: GP-UCB on the DW-POE regularized posterior.
pub fn run_abo<T: Real>(case: &ObjectiveCase<T>, lf_data: &Dataset<T>, config: &RunConfig) -> Result<RunRecord<T>> {
    config.validate()?;
    let lf = fit_lf_model(case, lf_data, config)?;
    let state = WeightState::new(T::lit(config.abo.w_lf_init), T::lit(config.abo.alpha))?;
    let policy = AboPolicy::new(lf, state, config.abo.adapt_weight);
    Session::new(case, config, initial_design(case, config), policy)?.run_to_end()
}

/// The HF point suggested by the LF model: argmax of its UCB.
pub fn lf_warm_start<T: Real>(case: &ObjectiveCase<T>, lf: &GpModel<T>, config: &RunConfig) -> Result<Vec<T>> {
    let mut rng = stream_rng(config.seed, Stream::WarmStart);
    let sqrt_beta = T::lit(config.beta.sqrt_beta(1, case.dim()));
    let best = maximize_with(
        |x: &[T]| ucb(&lf.predict_unchecked(x), sqrt_beta),
        &case.domain,
        &config.cmaes_config(case.dim()),
        &mut rng,
    )?;
    Ok(best.point)
}

/// MFBO-I: GP-UCB whose first design point is the LF model's suggestion.
pub fn run_mfbo1<T: Real>(case: &ObjectiveCase<T>, lf_data: &Dataset<T>, config: &RunConfig) -> Result<RunRecord<T>> {
    config.validate()?;
    let lf = fit_lf_model(case, lf_data, config)?;
    let mut design = vec![lf_warm_start(case, &lf, config)?];
    design.extend(initial_design(case, config).into_iter().take(config.n_init - 1));
    let mut rec = Session::new(case, config, design, GpUcbPolicy)?.run_to_end()?;
    rec.algorithm = Algorithm::Mfbo1;
    Ok(rec)
}

/// MFBO-II: HF-only queries under `min(UCB_hf, UCB_lf + ζ)`.
pub fn run_mfbo2<T: Real>(case: &ObjectiveCase<T>, lf_data: &Dataset<T>, config: &RunConfig) -> Result<RunRecord<T>> {
    config.validate()?;
    let lf = fit_lf_model(case, lf_data, config)?;
    let zeta = match config.mfbo2.zeta {
        Some(z) => T::lit(z),
        None => sample_sd(lf_data.outputs()),
    };
    Session::new(case, config, initial_design(case, config), Mfbo2Policy::new(lf, zeta))?.run_to_end()
}

fn sample_sd<T: Real>(v: &[T]) -> T {
    if v.len() < 2 {
        return T::zero();
    }
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    (v.iter().map(|&y| (y - mean) * (y - mean)).sum::<T>() / (n - T::one())).sqrt()
}

/// Dispatches to the loop for `algorithm`; `lf_data` is ignored by GP-UCB.
pub fn run<T: Real>(
    algorithm: Algorithm,
    case: &ObjectiveCase<T>,
    lf_data: &Dataset<T>,
    config: &RunConfig,
) -> Result<RunRecord<T>> {
    match algorithm {
        Algorithm::GpUcb => run_gp_ucb(case, config),
        Algorithm::Abo => run_abo(case, lf_data, config),
        Algorithm::Mfbo1 => run_mfbo1(case, lf_data, config),
        Algorithm::Mfbo2 => run_mfbo2(case, lf_data, config),
    }
}
