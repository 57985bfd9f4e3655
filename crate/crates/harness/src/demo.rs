//! Posterior snapshot on a 1D grid: HF, LF and regularized beliefs with
//! both UCB curves.

use abo::acquisition::{regularized_ucb, ucb};
use abo::benchmarks::generate_lf_dataset;
use abo::fusion::WeightState;
use abo::gp::{fit_hyperparams, fit_posterior};
use abo::optimizers::{fit_lf_model, initial_design, initial_hyper, AboPolicy, RunConfig};
use abo::rng::{stream_rng, Stream};
use abo::{Dataset, ObjectiveCase};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Column order of the dump CSV.
pub const DUMP_COLUMNS: [&str; 11] = [
    "x", "f", "f_l", "hf_mean", "hf_sd", "lf_mean", "lf_sd", "reg_mean", "reg_sd", "ucb_plain", "ucb_reg",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DumpRow {
    pub x: f64,
    pub f: f64,
    pub f_l: f64,
    pub hf_mean: f64,
    pub hf_sd: f64,
    pub lf_mean: f64,
    pub lf_sd: f64,
    pub reg_mean: f64,
    pub reg_sd: f64,
    pub ucb_plain: f64,
    pub ucb_reg: f64,
}

/// `count` HF points from the seeded initial-design stream and `lf_count`
/// LF points, as used by the `demo` command.
pub fn demo_datasets(
    case: &ObjectiveCase,
    count: usize,
    lf_count: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if count < 1 || lf_count < 1 {
        return Err(HarnessError::Usage("demo needs at least one HF and one LF point".into()));
    }
    let config = RunConfig {
        budget: count,
        n_init: count,
        seed,
        ..RunConfig::default()
    };
    let mut noise = stream_rng(seed, Stream::ObservationNoise);
    let mut hf = Dataset::empty();
    for x in initial_design(case, &config) {
        let (_, y) = case.observe(&x, &mut noise)?;
        hf.push(x, y)?;
    }
    Ok((hf, generate_lf_dataset(case, lf_count, seed)?))
}

/// Evaluates the fitted HF and LF GPs and their DW-POE fusion at `grid`
/// evenly spaced points spanning the domain, endpoints included.
pub fn posterior_dump(
    case: &ObjectiveCase,
    hf_points: &Dataset,
    lf_points: &Dataset,
    grid: usize,
    w_lf: f64,
    config: &RunConfig,
) -> Result<Vec<DumpRow>> {
    if case.dim() != 1 {
        return Err(HarnessError::Usage(format!(
            "posterior dump needs a 1D case; {} has dimension {}",
            case.name,
            case.dim()
        )));
    }
    if grid < 2 {
        return Err(HarnessError::Usage("grid must have at least 2 points".into()));
    }
    if hf_points.is_empty() {
        return Err(HarnessError::Usage("posterior dump needs at least one HF point".into()));
    }
    let state = WeightState::new(w_lf, config.abo.alpha).map_err(|e| HarnessError::Usage(e.to_string()))?;

    let diag = case.domain.diagonal();
    let fit_cfg = config.fit.unwrap_or_else(|| abo::gp::FitConfig::for_diagonal(diag));
    let init = initial_hyper(hf_points, diag);
    let mut rng = stream_rng(config.seed, Stream::HfHyperFit);
    let out = fit_hyperparams(hf_points, &init, &fit_cfg, &mut rng);
    let hf = fit_posterior(hf_points, out.hyper).or_else(|_| fit_posterior(hf_points, init))?;
    let lf = fit_lf_model(case, lf_points, config)?;
    let policy = AboPolicy::new(lf, state, false);
    let sqrt_beta = config.beta.sqrt_beta(hf_points.len(), 1);

    let (lo, hi) = (case.domain.lower()[0], case.domain.upper()[0]);
    let last = (grid - 1) as f64;
    (0..grid)
        .map(|i| {
            let x = if i == grid - 1 { hi } else { lo + (hi - lo) * i as f64 / last };
            let (h, l, r) = policy.regularized(&hf, &[x]);
            Ok(DumpRow {
                x,
                f: case.hf(&[x])?,
                f_l: case.lf(&[x])?,
                hf_mean: h.mean,
                hf_sd: h.sd,
                lf_mean: l.mean,
                lf_sd: l.sd,
                reg_mean: r.mean,
                reg_sd: r.sd,
                ucb_plain: ucb(&h, sqrt_beta),
                ucb_reg: regularized_ucb(&r.into(), sqrt_beta),
            })
        })
        .collect()
}

/// Index of the grid row closest to `x`.
pub fn nearest_row(rows: &[DumpRow], x: f64) -> usize {
    rows.iter()
        .enumerate()
        .min_by(|a, b| (a.1.x - x).abs().total_cmp(&(b.1.x - x).abs()))
        .map(|(i, _)| i)
        .expect("non-empty grid")
}
