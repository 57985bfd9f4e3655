//! On-disk layout of an experiment:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/<algorithm>_stats.csv
//! <dir>/records/<algorithm>/seed_<seed>.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use abo::optimizers::Algorithm;
use abo::RunRecord;
use serde::{Deserialize, Serialize};

use crate::demo::{DumpRow, DUMP_COLUMNS};
use crate::error::{HarnessError, Result};
use crate::experiment::{ExperimentOutcome, RunFailure};
use crate::spec::ExperimentSpec;
use crate::stats::AggregateStats;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON schema of a stored run record.
pub const RUN_RECORD_SCHEMA: &str = include_str!("../schema/run_record.schema.json");

/// Column order of the stats CSV. `evaluations` counts all HF evaluations
/// including the initial design.
pub const STATS_COLUMNS: [&str; 8] = [
    "evaluations",
    "n",
    "mean_regret",
    "sd_regret",
    "band_lower",
    "band_upper",
    "mean_hf_weight",
    "sd_hf_weight",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRecord {
    pub schema_version: u32,
    #[serde(flatten)]
    pub record: RunRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    /// `git describe` of the source tree the binary was built from.
    pub git_describe: Option<String>,
    pub spec: ExperimentSpec,
    pub seeds: Vec<u64>,
    pub effective_n: BTreeMap<String, usize>,
    pub failures: Vec<RunFailure>,
}

pub fn record_path(dir: &Path, algorithm: Algorithm, seed: u64) -> PathBuf {
    dir.join("records").join(algorithm.as_str()).join(format!("seed_{seed}.json"))
}

pub fn stats_path(dir: &Path, algorithm: Algorithm) -> PathBuf {
    dir.join(format!("{}_stats.csv", algorithm.as_str()))
}

pub fn git_describe() -> Option<String> {
    let out = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(HarnessError::io(path))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(HarnessError::json(path))?;
    text.push('\n');
    fs::write(path, text).map_err(HarnessError::io(path))
}

pub fn write_record(dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    let path = record_path(dir, record.algorithm, record.seed);
    create_dir(path.parent().expect("record path has a parent"))?;
    let stored = StoredRecord {
        schema_version: SCHEMA_VERSION,
        record: record.clone(),
    };
    write_json(&path, &stored)?;
    Ok(path)
}

pub fn write_stats_csv(path: &Path, stats: &AggregateStats) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(HarnessError::csv(path))?;
    for row in &stats.rows {
        w.serialize(row).map_err(HarnessError::csv(path))?;
    }
    w.flush().map_err(HarnessError::io(path))
}

pub fn read_stats_csv(path: &Path) -> Result<Vec<crate::stats::StatsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(HarnessError::csv(path))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(HarnessError::csv(path))
}

pub fn write_dump_csv<W: std::io::Write>(out: W, rows: &[DumpRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(HarnessError::csv("<dump>"))?;
    }
    w.flush().map_err(HarnessError::io("<dump>"))
}

/// Header line of the dump CSV, for documentation and tests.
pub fn dump_header() -> String {
    DUMP_COLUMNS.join(",")
}

/// Writes records, per-algorithm stats and the manifest. Records are
/// written in the outcome's order by this single thread.
pub fn write_outputs(dir: &Path, outcome: &ExperimentOutcome) -> Result<Manifest> {
    create_dir(dir)?;
    for r in &outcome.records {
        write_record(dir, r)?;
    }
    for s in &outcome.stats {
        write_stats_csv(&stats_path(dir, s.algorithm), s)?;
    }
    // the output location is not part of what determines the results
    let spec = ExperimentSpec {
        output_dir: None,
        ..outcome.spec.clone()
    };
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        git_describe: git_describe(),
        spec,
        seeds: outcome.spec.seeds(),
        effective_n: outcome.stats.iter().map(|s| (s.algorithm.to_string(), s.n_effective)).collect(),
        failures: outcome.failures.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn read_record(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
    let stored: StoredRecord = serde_json::from_str(&text).map_err(HarnessError::json(path))?;
    if stored.schema_version != SCHEMA_VERSION {
        return Err(HarnessError::Runtime(format!(
            "{}: schema version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            stored.schema_version
        )));
    }
    Ok(stored.record)
}

/// Every stored record under `dir/records`, sorted by algorithm then seed.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let root = dir.join("records");
    let mut records = Vec::new();
    let algs = fs::read_dir(&root).map_err(HarnessError::io(&root))?;
    for entry in algs {
        let alg_dir = entry.map_err(HarnessError::io(&root))?.path();
        if !alg_dir.is_dir() {
            continue;
        }
        for file in fs::read_dir(&alg_dir).map_err(HarnessError::io(&alg_dir))? {
            let path = file.map_err(HarnessError::io(&alg_dir))?.path();
            if path.extension().is_some_and(|e| e == "json") {
                records.push(read_record(&path)?);
            }
        }
    }
    if records.is_empty() {
        return Err(HarnessError::Runtime(format!("no run records under {}", root.display())));
    }
    records.sort_by(|a, b| (a.algorithm.as_str(), a.seed).cmp(&(b.algorithm.as_str(), b.seed)));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::aggregate;

    fn record(seed: u64) -> RunRecord {
        RunRecord {
            algorithm: Algorithm::Abo,
            case: "case1".into(),
            seed,
            n_init: 1,
            xs: vec![vec![0.5], vec![4.0]],
            ys: vec![1.0, 12.0],
            f_values: vec![1.0, 12.0],
            incumbent: vec![1.0, 12.0],
            w_lf: Some(vec![0.5, 0.25]),
            iter_seconds: vec![],
            fit_failures: 0,
        }
    }

    #[test]
    fn record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = record(3);
        let path = write_record(dir.path(), &r).unwrap();
        assert!(path.ends_with("records/abo/seed_3.json"));
        assert_eq!(read_record(&path).unwrap(), r);
        assert_eq!(read_records(dir.path()).unwrap(), vec![r]);
    }

    #[test]
    fn stats_csv_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let r = record(0);
        let s = aggregate(Algorithm::Abo, "case1", &[&r], 12.5).unwrap();
        let path = dir.path().join("s.csv");
        write_stats_csv(&path, &s).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), STATS_COLUMNS.join(","));
        assert_eq!(text.lines().count(), r.len() + 1);
        assert_eq!(read_stats_csv(&path).unwrap(), s.rows);
    }

    #[test]
    fn missing_dir_reports_path() {
        let e = read_records(Path::new("/nonexistent/abo")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/abo"));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn wrong_schema_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_record(dir.path(), &record(1)).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 9");
        fs::write(&path, text).unwrap();
        assert!(read_record(&path).is_err());
    }
}
