//! Experiment description and its JSON layering: built-in defaults, then a
//! config file, then `key=value` patches, then explicit flags.

use std::path::{Path, PathBuf};

use abo::benchmarks::{CaseName, CurrinVariant};
use abo::optimizers::{Algorithm, RunConfig};
use abo::ObjectiveCase;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{HarnessError, Result};

/// Default output directory when neither the config nor a flag sets one.
pub const OUTPUT_DIR_ENV: &str = "ABO_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "abo-output";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub case: CaseName,
    pub algorithms: Vec<Algorithm>,
    pub n_runs: usize,
    /// Run `i` of every algorithm uses seed `seed_master + i`.
    pub seed_master: u64,
    /// Size of the LF dataset handed to the LF-aware algorithms.
    pub lf_count: usize,
    /// Observation noise sd on HF evaluations.
    pub noise_sd: f64,
    pub currin_variant: CurrinVariant,
    /// Per-run settings; its `seed` is replaced by the paired seed.
    pub run: RunConfig,
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `None` lets the pool pick.
    pub jobs: Option<usize>,
    /// Keep per-iteration wall times in the stored records. Off by default
    /// so that outputs depend on the config alone.
    pub record_timings: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            case: CaseName::Case1,
            algorithms: vec![Algorithm::GpUcb, Algorithm::Abo],
            n_runs: 100,
            seed_master: 0,
            lf_count: 20,
            noise_sd: 0.0,
            currin_variant: CurrinVariant::Printed,
            run: RunConfig::default(),
            output_dir: None,
            jobs: None,
            record_timings: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(HarnessError::Usage(m));
        if self.n_runs < 1 {
            return usage("n_runs must be >= 1".into());
        }
        if self.algorithms.is_empty() {
            return usage("at least one algorithm is required".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return usage(format!("algorithm `{a}` listed twice"));
            }
        }
        if self.lf_count < 1 && self.algorithms.iter().any(|a| a.uses_lf_data()) {
            return usage("lf_count must be >= 1 for LF-aware algorithms".into());
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return usage(format!("noise_sd must be finite and >= 0, got {}", self.noise_sd));
        }
        if self.jobs == Some(0) {
            return usage("jobs must be >= 1".into());
        }
        self.run.validate().map_err(|e| HarnessError::Usage(e.to_string()))
    }

    /// Paired seeds, one per run index.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_runs as u64).map(|i| self.seed_master.wrapping_add(i)).collect()
    }

    pub fn objective(&self) -> ObjectiveCase {
        ObjectiveCase::new(self.case, self.currin_variant).with_noise(self.noise_sd)
    }

    /// `output_dir`, else `$ABO_OUTPUT_DIR`, else `./abo-output`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// Layers `file` (a spec, or a manifest whose `spec` field is used),
    /// `patches` and `flags` over the defaults. Later layers win.
    pub fn resolve(file: Option<&Path>, patches: &[String], flags: Value) -> Result<Self> {
        let mut value = serde_json::to_value(Self::default()).expect("default spec serializes");
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
            let mut layer: Value = serde_json::from_str(&text).map_err(HarnessError::json(path))?;
            if layer.get("schema_version").is_some() {
                if let Some(inner) = layer.get_mut("spec").map(Value::take) {
                    layer = inner;
                }
            }
            merge(&mut value, layer);
        }
        for p in patches {
            apply_patch(&mut value, p)?;
        }
        merge(&mut value, flags);
        let spec: Self = serde_json::from_value(value).map_err(|e| HarnessError::Usage(format!("invalid config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Recursive object merge; non-object values replace.
pub fn merge(base: &mut Value, layer: Value) {
    match (base, layer) {
        (Value::Object(b), Value::Object(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, l) => *b = l,
    }
}

/// Applies `a.b.c=value`. The value is parsed as JSON and falls back to a
/// plain string, so `case=case3` and `run.budget=30` both work.
pub fn apply_patch(value: &mut Value, patch: &str) -> Result<()> {
    let (path, raw) = patch
        .split_once('=')
        .ok_or_else(|| HarnessError::Usage(format!("override `{patch}` is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(HarnessError::Usage(format!("bad override key `{path}`")));
    }
    let mut slot = value;
    for k in &keys[..keys.len() - 1] {
        if slot.is_null() {
            *slot = Value::Object(Default::default());
        }
        slot = slot
            .as_object_mut()
            .ok_or_else(|| HarnessError::Usage(format!("override `{path}`: `{k}` is not an object")))?
            .entry(k.to_string())
            .or_insert(Value::Null);
    }
    if slot.is_null() {
        *slot = Value::Object(Default::default());
    }
    let obj = slot
        .as_object_mut()
        .ok_or_else(|| HarnessError::Usage(format!("override `{path}` does not name an object field")))?;
    obj.insert(keys[keys.len() - 1].to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_round_trip_and_validate() {
        let s = ExperimentSpec::default();
        s.validate().unwrap();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(serde_json::from_value::<ExperimentSpec>(v).unwrap(), s);
    }

    #[test]
    fn layering_order() {
        let s = ExperimentSpec::resolve(
            None,
            &["run.budget=30".into(), "case=case3".into(), "n_runs=7".into()],
            json!({"n_runs": 4}),
        )
        .unwrap();
        assert_eq!(s.run.budget, 30);
        assert_eq!(s.case, CaseName::Case3);
        assert_eq!(s.n_runs, 4);
        assert_eq!(s.run.n_init, 2);
    }

    #[test]
    fn nested_patch_into_null() {
        let s = ExperimentSpec::resolve(None, &["run.mfbo2.zeta=1.5".into()], json!({})).unwrap();
        assert_eq!(s.run.mfbo2.zeta, Some(1.5));
        let s = ExperimentSpec::resolve(None, &["jobs=2".into()], json!({})).unwrap();
        assert_eq!(s.jobs, Some(2));
    }

    #[test]
    fn typos_and_bad_values_are_usage_errors() {
        for p in ["run.budgte=3", "cases=case1", "case=case9", "n_runs=0", "noequals", "algorithms=[\"ucb\"]"] {
            let e = ExperimentSpec::resolve(None, &[p.to_string()], json!({})).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{p}");
        }
    }

    #[test]
    fn seeds_are_offsets() {
        let s = ExperimentSpec {
            n_runs: 3,
            seed_master: 10,
            ..Default::default()
        };
        assert_eq!(s.seeds(), vec![10, 11, 12]);
    }
}
