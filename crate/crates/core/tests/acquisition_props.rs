use abo::acquisition::{maximize, maximize_with, ucb, CmaesConfig};
use abo::rng::{stream_rng, Stream};
use abo::{BoxDomain, GaussianBelief};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cmaes_finds_quadratic_maximum_within_budget() {
    let domain = BoxDomain::cube(0.0, 1.0, 4).unwrap();
    let mut pick = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..10 {
        let a: Vec<f64> = (0..4).map(|_| pick.random::<f64>()).collect();
        let f = |x: &[f64]| -x.iter().zip(&a).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
        let mut rng = stream_rng(trial, Stream::Acquisition);
        let best = maximize(f, &domain, 2000, &mut rng).unwrap();
        assert!(best.evaluations <= 2000);
        assert!(best.value > -1e-3, "trial {trial}: {}", best.value);
        assert!(domain.contains(&best.point));

        let mut again = stream_rng(trial, Stream::Acquisition);
        let repeat = maximize(f, &domain, 2000, &mut again).unwrap();
        assert_eq!(repeat.point, best.point);
        assert_eq!(repeat.value, best.value);
    }
}

#[test]
fn cmaes_beats_its_first_generation() {
    let domain = BoxDomain::cube(-2.0, 3.0, 3).unwrap();
    let f = |x: &[f64]| (3.0 * x[0]).sin() + (2.0 * x[1]).cos() - 0.1 * x[2] * x[2];
    let lambda = CmaesConfig::default_population(3);
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first_gen = maximize_with(f, &domain, &CmaesConfig::with_budget(lambda), &mut rng).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let full = maximize_with(f, &domain, &CmaesConfig::with_budget(50 * lambda), &mut rng).unwrap();
        assert!(full.value >= first_gen.value);
    }
}

proptest! {
    #[test]
    fn ucb_is_monotone_in_mean_and_sd(
        m in -10.0f64..10.0, s in 0.0f64..5.0, dm in 1e-6f64..1.0, ds in 1e-6f64..1.0, b in 0.01f64..4.0,
    ) {
        let base = ucb(&GaussianBelief::new(m, s), b);
        prop_assert!(ucb(&GaussianBelief::new(m + dm, s), b) > base);
        prop_assert!(ucb(&GaussianBelief::new(m, s + ds), b) > base);
    }
}
