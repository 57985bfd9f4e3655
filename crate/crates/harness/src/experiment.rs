//! Seeded Monte-Carlo runs over a worker pool.

use abo::benchmarks::generate_lf_dataset;
use abo::optimizers::{self, Algorithm};
use abo::{Dataset, ObjectiveCase, RunRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::spec::ExperimentSpec;
use crate::stats::{aggregate, AggregateStats};

/// A run that errored and was left out of the aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    /// Completed runs, grouped by algorithm in spec order, then by seed.
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    /// One entry per algorithm with at least one completed run.
    pub stats: Vec<AggregateStats>,
}

impl ExperimentOutcome {
    pub fn records_for(&self, algorithm: Algorithm) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn stats_for(&self, algorithm: Algorithm) -> Option<&AggregateStats> {
        self.stats.iter().find(|s| s.algorithm == algorithm)
    }
}

/// One run of `algorithm` with paired seed `seed`. The LF dataset depends
/// on the seed only, so every LF-aware algorithm sees the same one.
pub fn single_run(
    spec: &ExperimentSpec,
    case: &ObjectiveCase,
    algorithm: Algorithm,
    seed: u64,
) -> abo::Result<RunRecord> {
    let mut config = spec.run.clone();
    config.seed = seed;
    let lf = if algorithm.uses_lf_data() {
        generate_lf_dataset(case, spec.lf_count, seed)?
    } else {
        Dataset::empty()
    };
    let mut record = optimizers::run(algorithm, case, &lf, &config)?;
    if !spec.record_timings {
        record.iter_seconds.clear();
    }
    Ok(record)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let case = spec.objective();
    run_experiment_with(spec, |a, s| single_run(spec, &case, a, s))
}

/// [`run_experiment`] with a custom per-job runner.
pub fn run_experiment_with<F>(spec: &ExperimentSpec, runner: F) -> Result<ExperimentOutcome>
where
    F: Fn(Algorithm, u64) -> abo::Result<RunRecord> + Sync,
{
    spec.validate()?;
    let case = spec.objective();
    let jobs: Vec<(Algorithm, u64)> = spec
        .algorithms
        .iter()
        .flat_map(|&a| spec.seeds().into_iter().map(move |s| (a, s)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start worker pool: {e}")))?;
    // par_iter().collect() keeps job order, so the result is independent
    // of scheduling
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(a, s)| (a, s, runner(a, s)))
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (algorithm, seed, res) in results {
        match res {
            Ok(r) => records.push(r),
            Err(e) => {
                log::warn!("{algorithm} seed {seed} failed and is excluded: {e}");
                failures.push(RunFailure {
                    algorithm,
                    seed,
                    message: e.to_string(),
                });
            }
        }
    }

    let mut stats = Vec::new();
    for &a in &spec.algorithms {
        let group: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == a).collect();
        if group.is_empty() {
            log::warn!("{a}: every run failed");
            continue;
        }
        if group.len() < spec.n_runs {
            log::warn!("{a}: effective n = {} of {}", group.len(), spec.n_runs);
        }
        stats.push(aggregate(a, case.name.as_str(), &group, case.f_star)?);
    }
    if stats.is_empty() {
        return Err(HarnessError::Runtime("every run failed".into()));
    }
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        records,
        failures,
        stats,
    })
}
