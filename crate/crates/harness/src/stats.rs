//! Per-iteration aggregation over Monte-Carlo runs and the paired sign test.

use std::collections::BTreeMap;

use abo::benchmarks::simple_regret;
use abo::optimizers::Algorithm;
use abo::RunRecord;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{HarnessError, Result};

/// One row per HF evaluation count. `evaluations` counts every HF
/// evaluation, the initial design included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub evaluations: usize,
    pub n: usize,
    pub mean_regret: f64,
    pub sd_regret: f64,
    /// `mean − 2 sd`.
    pub band_lower: f64,
    /// `mean + 2 sd`.
    pub band_upper: f64,
    /// Mean of `1 − w_lf`; empty for algorithms without an LF weight.
    pub mean_hf_weight: Option<f64>,
    pub sd_hf_weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub algorithm: Algorithm,
    pub case: String,
    /// Runs that completed and entered the averages.
    pub n_effective: usize,
    pub rows: Vec<StatsRow>,
}

impl AggregateStats {
    pub fn final_row(&self) -> &StatsRow {
        self.rows.last().expect("stats have at least one row")
    }
}

/// Sample mean and sample standard deviation (`n − 1`); sd is 0 for a
/// single value.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Aggregates runs of one algorithm. All records must have the same length.
pub fn aggregate(algorithm: Algorithm, case: &str, records: &[&RunRecord], f_star: f64) -> Result<AggregateStats> {
    let Some(first) = records.first() else {
        return Err(HarnessError::Runtime(format!("no completed runs for {algorithm}")));
    };
    let len = first.len();
    if let Some(r) = records.iter().find(|r| r.len() != len) {
        return Err(HarnessError::Runtime(format!(
            "run with seed {} has {} evaluations, expected {len}",
            r.seed,
            r.len()
        )));
    }
    let regrets: Vec<Vec<f64>> = records.iter().map(|r| simple_regret(r, f_star)).collect();
    let weights: Option<Vec<&Vec<f64>>> = records.iter().map(|r| r.w_lf.as_ref()).collect();
    let rows = (0..len)
        .map(|t| {
            let col: Vec<f64> = regrets.iter().map(|r| r[t]).collect();
            let (mean, sd) = mean_sd(&col);
            let (mean_w, sd_w) = match &weights {
                Some(ws) => {
                    let hf: Vec<f64> = ws.iter().map(|w| 1.0 - w[t]).collect();
                    let (m, s) = mean_sd(&hf);
                    (Some(m), Some(s))
                }
                None => (None, None),
            };
            StatsRow {
                evaluations: t + 1,
                n: col.len(),
                mean_regret: mean,
                sd_regret: sd,
                band_lower: mean - 2.0 * sd,
                band_upper: mean + 2.0 * sd,
                mean_hf_weight: mean_w,
                sd_hf_weight: sd_w,
            }
        })
        .collect();
    Ok(AggregateStats {
        algorithm,
        case: case.to_string(),
        n_effective: records.len(),
        rows,
    })
}

/// Aggregates every algorithm present in `records`, in first-seen order.
pub fn aggregate_all(records: &[RunRecord], f_star: f64) -> Result<Vec<AggregateStats>> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = r.algorithm.as_str();
        if !groups.contains_key(key) {
            order.push(r.algorithm);
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|a| {
            let group = &groups[a.as_str()];
            aggregate(a, &group[0].case, group, f_star)
        })
        .collect()
}

/// Outcome of a two-sided exact sign test on paired differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    /// Pairs where the first sample is lower (better regret).
    pub wins: usize,
    pub losses: usize,
    /// Equal pairs; dropped from the test.
    pub ties: usize,
    pub p_value: f64,
    /// Mean of `a − b` over all pairs.
    pub mean_diff: f64,
}

impl SignTest {
    /// `a` is significantly lower than `b` at level `alpha`.
    pub fn favors_first(&self, alpha: f64) -> bool {
        self.wins > self.losses && self.p_value < alpha
    }
}

/// Exact two-sided binomial sign test of `a` against `b`, paired by index.
pub fn sign_test(a: &[f64], b: &[f64]) -> Result<SignTest> {
    if a.len() != b.len() || a.is_empty() {
        return Err(HarnessError::Runtime(format!(
            "sign test needs equal non-empty samples, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Less) => wins += 1,
            Some(std::cmp::Ordering::Greater) => losses += 1,
            _ => ties += 1,
        }
    }
    let n = wins + losses;
    let p_value = if n == 0 {
        1.0
    } else {
        let bin = Binomial::new(0.5, n as u64).expect("p = 0.5 is valid");
        (2.0 * bin.cdf(wins.min(losses) as u64)).min(1.0)
    };
    let mean_diff = a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64;
    Ok(SignTest {
        wins,
        losses,
        ties,
        p_value,
        mean_diff,
    })
}

/// Final simple regrets of two algorithms paired by seed. Seeds missing on
/// either side are skipped.
pub fn paired_final_regrets(
    records: &[RunRecord],
    a: Algorithm,
    b: Algorithm,
    f_star: f64,
) -> (Vec<u64>, Vec<f64>, Vec<f64>) {
    let finals = |alg: Algorithm| -> BTreeMap<u64, f64> {
        records
            .iter()
            .filter(|r| r.algorithm == alg && !r.is_empty())
            .map(|r| (r.seed, *simple_regret(r, f_star).last().expect("non-empty")))
            .collect()
    };
    let fa = finals(a);
    let fb = finals(b);
    let mut seeds = Vec::new();
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    for (seed, x) in &fa {
        if let Some(y) = fb.get(seed) {
            seeds.push(*seed);
            ra.push(*x);
            rb.push(*y);
        }
    }
    (seeds, ra, rb)
}
