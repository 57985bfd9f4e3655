use abo::benchmarks::{simple_regret_from_values, CaseName};
use abo::optimizers::Algorithm;
use abo::{Error, RunRecord};
use abo_harness::stats::{aggregate, mean_sd};
use abo_harness::{run_experiment, run_experiment_with, ExperimentSpec};
use proptest::prelude::*;

fn small_spec() -> ExperimentSpec {
    let mut s = ExperimentSpec {
        case: CaseName::Case1,
        algorithms: vec![Algorithm::GpUcb, Algorithm::Abo, Algorithm::Mfbo2],
        n_runs: 3,
        seed_master: 40,
        lf_count: 10,
        jobs: Some(2),
        ..ExperimentSpec::default()
    };
    s.run.budget = 6;
    s.run.acquisition_budget = Some(120);
    s
}

fn fake_record(algorithm: Algorithm, seed: u64, f: Vec<f64>) -> RunRecord {
    let mut inc = Vec::new();
    for &v in &f {
        inc.push(inc.last().map_or(v, |&b: &f64| b.max(v)));
    }
    RunRecord {
        algorithm,
        case: "case1".into(),
        seed,
        n_init: 1,
        xs: f.iter().map(|_| vec![0.0]).collect(),
        ys: f.clone(),
        f_values: f,
        incumbent: inc,
        w_lf: None,
        iter_seconds: vec![],
        fit_failures: 0,
    }
}

#[test]
fn paired_runs_share_design_and_noise() {
    let mut spec = small_spec();
    spec.noise_sd = 0.3;
    spec.n_runs = 1;
    let out = run_experiment(&spec).unwrap();
    let recs: Vec<_> = out.records.iter().collect();
    assert_eq!(recs.len(), 3);
    for r in &recs[1..] {
        assert_eq!(r.xs[..2], recs[0].xs[..2]);
        assert_eq!(r.ys[..2], recs[0].ys[..2]);
        assert_eq!(r.seed, 40);
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let a = run_experiment(&ExperimentSpec {
        jobs: Some(1),
        ..small_spec()
    })
    .unwrap();
    let b = run_experiment(&ExperimentSpec {
        jobs: Some(3),
        ..small_spec()
    })
    .unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.stats, b.stats);
    let seeds: Vec<u64> = a.records_for(Algorithm::Abo).map(|r| r.seed).collect();
    assert_eq!(seeds, vec![40, 41, 42]);
}

#[test]
fn stats_have_budget_rows_and_hf_weight_only_for_abo() {
    let out = run_experiment(&small_spec()).unwrap();
    for s in &out.stats {
        assert_eq!(s.rows.len(), 6);
        assert_eq!(s.n_effective, 3);
        assert_eq!(s.rows[0].evaluations, 1);
        let has_w = s.final_row().mean_hf_weight.is_some();
        assert_eq!(has_w, s.algorithm == Algorithm::Abo);
    }
    assert!(out.records.iter().all(|r| r.iter_seconds.is_empty()));
}

#[test]
fn identical_runs_aggregate_to_the_single_trace() {
    let f = vec![1.0, 3.0, 2.0, 7.0];
    let out = run_experiment_with(&small_spec(), |a, s| Ok(fake_record(a, s, f.clone()))).unwrap();
    let single = simple_regret_from_values(&f, out.spec.objective().f_star);
    for s in &out.stats {
        for (row, r) in s.rows.iter().zip(&single) {
            assert_eq!(row.mean_regret, *r);
            assert_eq!(row.sd_regret, 0.0);
        }
    }
}

#[test]
fn failed_runs_are_excluded_and_counted() {
    let out = run_experiment_with(&small_spec(), |a, s| {
        if a == Algorithm::Abo && s == 41 {
            Err(Error::Domain("injected".into()))
        } else {
            Ok(fake_record(a, s, vec![1.0, 2.0]))
        }
    })
    .unwrap();
    assert_eq!(out.failures.len(), 1);
    assert_eq!(out.failures[0].seed, 41);
    assert!(out.failures[0].message.contains("injected"));
    assert_eq!(out.stats_for(Algorithm::Abo).unwrap().n_effective, 2);
    assert_eq!(out.stats_for(Algorithm::Abo).unwrap().final_row().n, 2);
    assert_eq!(out.stats_for(Algorithm::GpUcb).unwrap().n_effective, 3);
}

#[test]
fn all_runs_failing_is_a_runtime_error() {
    let e = run_experiment_with(&small_spec(), |_, _| Err(Error::EmptyDataset)).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregate_matches_brute_force(
        traces in prop::collection::vec(prop::collection::vec(-5.0f64..12.0, 5), 1..8),
        weights in prop::collection::vec(prop::collection::vec(0.0f64..0.99, 5), 8),
    ) {
        let f_star = 12.5;
        let records: Vec<RunRecord> = traces
            .iter()
            .enumerate()
            .map(|(i, f)| RunRecord {
                w_lf: Some(weights[i].clone()),
                ..fake_record(Algorithm::Abo, i as u64, f.clone())
            })
            .collect();
        let refs: Vec<&RunRecord> = records.iter().collect();
        let s = aggregate(Algorithm::Abo, "case1", &refs, f_star).unwrap();
        prop_assert_eq!(s.rows.len(), 5);
        for t in 0..5 {
            // running best of f* − f computed independently per run
            let col: Vec<f64> = traces
                .iter()
                .map(|f| f[..=t].iter().map(|v| f_star - v).fold(f64::INFINITY, f64::min))
                .collect();
            let (m, sd) = mean_sd(&col);
            let row = &s.rows[t];
            prop_assert_eq!(row.mean_regret, m);
            prop_assert_eq!(row.sd_regret, sd);
            prop_assert_eq!(row.band_upper, m + 2.0 * sd);
            prop_assert_eq!(row.band_lower, m - 2.0 * sd);
            let hf: Vec<f64> = (0..records.len()).map(|i| 1.0 - weights[i][t]).collect();
            prop_assert_eq!(row.mean_hf_weight, Some(mean_sd(&hf).0));
        }
    }
}
