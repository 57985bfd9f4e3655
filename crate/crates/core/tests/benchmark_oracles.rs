use abo::benchmarks::{
    case1_hf, case1_lf, case2_hf, case2_lf, case2_lf_corrected, case3_hf, case3_lf, case4_hf, case4_lf,
    generate_lf_dataset, simple_regret_from_values, CaseName, CurrinVariant,
};
use abo::ObjectiveCase;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Straight-line transcriptions, written independently of the library.

fn t_case1_f(x: f64) -> f64 {
    2.0 * x.powf(1.2) * (2.0 * x).sin() + 2.0
}

fn t_case1_fl(x: f64) -> f64 {
    0.7 * t_case1_f(x) + (x.powf(1.3) - 0.3) * (3.0 * x - 0.5).sin() + 4.0 * (2.0 * x).cos() - 5.0
}

fn t_currin(x1: f64, x2: f64) -> f64 {
    let x2 = if x2 < 1e-12 { 1e-12 } else { x2 };
    (1.0 - (-1.0 / (2.0 * x2)).exp())
        * (2300.0 * x1 * x1 * x1 + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0)
        / (100.0 * x1 * x1 * x1 + 500.0 * x1 * x1 + 4.0 * x1 + 20.0)
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn t_case2_fl(x1: f64, x2: f64, b_sign: f64) -> f64 {
    let a = t_currin(clamp01(x1 + 0.05), clamp01(x2 + 0.05));
    let b = t_currin(clamp01(x1 + 0.05), clamp01(f64::max(0.0, x2 + b_sign * 0.05)));
    let c = t_currin(clamp01(x1 - 0.05), clamp01(x2 + 0.05));
    let d = t_currin(clamp01(x1 - 0.05), clamp01(f64::max(0.0, x2 - 0.05)));
    (a + b + c + d) / 4.0
}

fn t_case3_f(x: &[f64]) -> f64 {
    let x1 = x[0].max(1e-8);
    x1 / 2.0 * ((1.0 + (x[1] + x[2] * x[2]) * x[3] / (x1 * x1)).sqrt() - 1.0)
        + (x1 + 3.0 * x[3]) * (1.0 + x[2].sin()).exp()
}

fn t_case3_fl(x: &[f64]) -> f64 {
    (1.0 + x[0].sin() / 10.0) * t_case3_f(x) - 2.0 * x[0] + x[1] * x[1] + x[2] * x[2] + 0.5
}

fn t_case4_f(x: &[f64]) -> f64 {
    2.0 / 3.0 * (x[0] + x[1]).exp() - x[3] * x[2].sin() + x[2]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn evaluators_match_transcriptions() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let x = 6.0 * rng.random::<f64>();
        assert!(rel(case1_hf(&[x]), t_case1_f(x)) < 1e-12);
        assert!(rel(case1_lf(&[x]), t_case1_fl(x)) < 1e-12);

        let u: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        assert!(rel(case2_hf(&u[..2]), t_currin(u[0], u[1])) < 1e-12);
        assert!(rel(case2_lf(&u[..2]), t_case2_fl(u[0], u[1], 1.0)) < 1e-12);
        assert!(rel(case2_lf_corrected(&u[..2]), t_case2_fl(u[0], u[1], -1.0)) < 1e-12);
        assert!(rel(case3_hf(&u), t_case3_f(&u)) < 1e-12, "{u:?}");
        assert!(rel(case3_lf(&u), t_case3_fl(&u)) < 1e-12, "{u:?}");
        assert!(rel(case4_hf(&u), t_case4_f(&u)) < 1e-12);
    }
}

#[test]
fn case4_affine_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..1000 {
        let u: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
        let f = case4_hf(&u);
        assert_eq!(case4_lf(&u), 1.2 * f - 1.0);
    }
    assert_eq!(case4_hf(&[0.0, 0.0, 0.0, 0.37]), 2.0 / 3.0);
    assert_eq!(case4_lf(&[0.0, 0.0, 0.0, 0.37]), 1.2 * (2.0 / 3.0) - 1.0);
}

#[test]
fn spot_values() {
    assert_eq!(case1_hf(&[0.0]), 2.0);
    // 1.4 + 0.3 sin(0.5) − 1, high-precision value
    assert!((case1_lf(&[0.0]) - 0.543_827_661_581_261_f64).abs() < 1e-14);
    assert!((case2_hf(&[0.0, 1.0]) - 3.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-14);
    assert!((case2_hf(&[0.5, 0.5]) - 7.405_123_913_298_809_f64).abs() < 1e-12);
    // first Park term tends to √(x₄(x₂ + x₃²))/2 as x₁ → 0
    let e = std::f64::consts::E;
    assert!((case3_hf(&[0.0, 1.0, 0.0, 1.0]) - (0.5 + 3.0 * e)).abs() < 1e-7);
    let x = [0.0, 0.4, 0.7, 0.2];
    assert!((case3_lf(&x) - (case3_hf(&x) + 0.16 + 0.49 + 0.5_f64)).abs() < 1e-14);
}

#[test]
fn clamped_evaluators_are_continuous() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..200 {
        let x1 = rng.random::<f64>();
        let at0 = case2_hf(&[x1, 0.0]);
        for x2 in [1e-13, 1e-12, 2e-12, 1e-9] {
            assert!((case2_hf(&[x1, x2]) - at0).abs() < 1e-6);
            assert!((case2_lf(&[x1, x2]) - case2_lf(&[x1, 0.0])).abs() < 1e-6);
        }
        let rest = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        let p = |x: f64| [x, rest[0], rest[1], rest[2]];
        let at0 = case3_hf(&p(0.0));
        for x in [1e-9, 1e-8, 2e-8, 1e-7] {
            assert!((case3_hf(&p(x)) - at0).abs() < 1e-6);
            assert!((case3_lf(&p(x)) - case3_lf(&p(0.0))).abs() < 1e-6);
        }
    }
}

#[test]
fn reference_optima_dominate_random_scans() {
    for name in CaseName::ALL {
        let case = ObjectiveCase::new(name, CurrinVariant::Printed);
        assert!((case.hf(&case.x_star).unwrap() - case.f_star).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..100_000 {
            let x = case.domain.sample(&mut rng);
            assert!(case.hf(&x).unwrap() <= case.f_star + 1e-6, "{name} at {x:?}");
        }
    }
}

#[test]
fn lf_datasets() {
    let case = ObjectiveCase::new(CaseName::Case1, CurrinVariant::Printed);
    let d = generate_lf_dataset(&case, 3, 9).unwrap();
    assert_eq!(d.len(), 3);
    for (x, y) in d.inputs().iter().zip(d.outputs()) {
        assert!(x[0] >= 0.0 && x[0] <= 6.0);
        assert_eq!(*y, case1_lf(x));
    }
    assert_eq!(generate_lf_dataset(&case, 3, 9).unwrap(), d);
    assert_ne!(generate_lf_dataset(&case, 3, 10).unwrap(), d);
    assert!(generate_lf_dataset(&case, 0, 9).is_err());
}

#[test]
fn simple_regret_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let f_star = 5.0;
    let f: Vec<f64> = (0..20).map(|_| 5.0 * rng.random::<f64>()).collect();
    let s = simple_regret_from_values(&f, f_star);
    for t in 0..20 {
        let best = f[..=t].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(s[t], f_star - best);
        if t > 0 {
            assert!(s[t] <= s[t - 1]);
        }
    }
    assert_eq!(simple_regret_from_values(&[4.0], 5.0), vec![1.0]);
    assert_eq!(simple_regret_from_values(&[1.0, 5.0, 2.0], 5.0), vec![4.0, 0.0, 0.0]);
}
