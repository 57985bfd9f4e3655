//! Type-II maximum likelihood for the GP hyperparameters.
//!
//! Multi-start projected BFGS over `(log κ₀, log h, log σ², m)` inside a
//! box. Restart points are drawn log-uniformly from the same box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::nlml_and_gradient;
use super::{Dataset, GpHyperparams};
use crate::scalar::Real;

/// Settings for [`fit_hyperparams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub restarts: usize,
    pub log_kappa0_bounds: (f64, f64),
    pub log_h_bounds: (f64, f64),
    pub log_noise_bounds: (f64, f64),
    /// Smallest noise variance ever used while fitting.
    pub noise_floor: f64,
    pub max_iters: usize,
    /// Convergence threshold on the infinity norm of the projected gradient.
    pub grad_tol: f64,
}

impl FitConfig {
    /// Default bounds for a domain whose box diagonal has length `diagonal`.
    pub fn for_diagonal(diagonal: f64) -> Self {
        Self {
            restarts: 5,
            log_kappa0_bounds: (-6.0, 6.0),
            log_h_bounds: ((0.01 * diagonal).ln(), (10.0 * diagonal).ln()),
            log_noise_bounds: (-12.0, 2.0),
            noise_floor: 1e-8,
            max_iters: 200,
            grad_tol: 1e-6,
        }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self::for_diagonal(1.0)
    }
}

/// Result of a hyperparameter search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome<T> {
    pub hyper: GpHyperparams<T>,
    /// NLML at `hyper`; `None` when the search was skipped or every
    /// evaluation failed.
    pub nlml: Option<T>,
    /// Set when no restart produced a finite objective.
    pub warning: bool,
}

struct Bounds<T> {
    lo: [T; 4],
    hi: [T; 4],
}

impl<T: Real> Bounds<T> {
    fn clamp(&self, x: &mut [T; 4]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.max(lo).min(hi);
        }
    }
}

fn to_hyper<T: Real>(x: &[T; 4]) -> GpHyperparams<T> {
    GpHyperparams {
        kappa0: x[0].exp(),
        h: x[1].exp(),
        noise_var: x[2].exp(),
        mean_const: x[3],
    }
}

fn evaluate<T: Real>(data: &Dataset<T>, x: &[T; 4]) -> Option<(T, [T; 4])> {
    let (f, g) = nlml_and_gradient(data, &to_hyper(x)).ok()?;
    let g = g.to_array();
    (f.is_finite() && g.iter().all(|v| v.is_finite())).then_some((f, g))
}

/// Zero the components that would push through an active bound.
fn project_gradient<T: Real>(x: &[T; 4], g: &[T; 4], b: &Bounds<T>) -> [T; 4] {
    let mut pg = *g;
    for i in 0..4 {
        if (x[i] <= b.lo[i] && g[i] > T::zero()) || (x[i] >= b.hi[i] && g[i] < T::zero()) {
            pg[i] = T::zero();
        }
    }
    pg
}

/// Projected BFGS with Armijo backtracking along the projection arc.
fn minimize_box<T: Real>(data: &Dataset<T>, x0: [T; 4], b: &Bounds<T>, cfg: &FitConfig) -> Option<([T; 4], T)> {
    let mut x = x0;
    b.clamp(&mut x);
    let (mut fx, mut g) = evaluate(data, &x)?;
    let mut hinv = identity4::<T>();
    let tol = T::lit(cfg.grad_tol);
    let c1 = T::lit(1e-4);

    for _ in 0..cfg.max_iters {
        let pg = project_gradient(&x, &g, b);
        if pg.iter().fold(T::zero(), |m, v| m.max(v.abs())) < tol {
            break;
        }
        let mut d = neg_matvec(&hinv, &pg);
        for i in 0..4 {
            if pg[i] == T::zero() {
                d[i] = T::zero();
            }
        }
        if dot4(&d, &pg) >= T::zero() {
            hinv = identity4();
            d = pg.map(|v| -v);
        }

        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..50 {
            let mut xn = [T::zero(); 4];
            for i in 0..4 {
                xn[i] = x[i] + step * d[i];
            }
            b.clamp(&mut xn);
            let s: [T; 4] = std::array::from_fn(|i| xn[i] - x[i]);
            if s.iter().all(|v| *v == T::zero()) {
                break;
            }
            if let Some((fn_, gn)) = evaluate(data, &xn) {
                if fn_ <= fx + c1 * dot4(&g, &s) {
                    accepted = Some((xn, fn_, gn, s));
                    break;
                }
            }
            step *= T::lit(0.5);
        }

        let Some((xn, fn_, gn, s)) = accepted else {
            if hinv == identity4() {
                break;
            }
            hinv = identity4();
            continue;
        };
        let y: [T; 4] = std::array::from_fn(|i| gn[i] - g[i]);
        let sy = dot4(&s, &y);
        if sy > T::lit(1e-12) * dot4(&s, &s).sqrt() * dot4(&y, &y).sqrt() {
            bfgs_update(&mut hinv, &s, &y, sy);
        }
        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if improvement <= T::lit(1e-14) * (T::one() + fx.abs()) {
            let pg = project_gradient(&x, &g, b);
            if pg.iter().fold(T::zero(), |m, v| m.max(v.abs())) < T::lit(1e3) * tol {
                break;
            }
        }
    }
    Some((x, fx))
}

fn identity4<T: Real>() -> [[T; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

fn dot4<T: Real>(a: &[T; 4], b: &[T; 4]) -> T {
    (0..4).map(|i| a[i] * b[i]).sum()
}

fn neg_matvec<T: Real>(m: &[[T; 4]; 4], v: &[T; 4]) -> [T; 4] {
    std::array::from_fn(|i| -dot4(&m[i], v))
}

fn bfgs_update<T: Real>(h: &mut [[T; 4]; 4], s: &[T; 4], y: &[T; 4], sy: T) {
    let rho = T::one() / sy;
    let hy: [T; 4] = std::array::from_fn(|i| dot4(&h[i], y));
    let yhy = dot4(y, &hy);
    for i in 0..4 {
        for j in 0..4 {
            h[i][j] += (T::one() + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Maximizes the marginal likelihood over the hyperparameters.
///
/// The first start is `init` (projected into the bounds); the remaining
/// `restarts − 1` starts are drawn from `rng`. Datasets with fewer than two
/// points return `init` untouched.
pub fn fit_hyperparams<T: Real, R: Rng + ?Sized>(
    data: &Dataset<T>,
    init: &GpHyperparams<T>,
    cfg: &FitConfig,
    rng: &mut R,
) -> FitOutcome<T> {
    if data.len() < 2 {
        return FitOutcome {
            hyper: *init,
            nlml: None,
            warning: false,
        };
    }
    let ys = data.outputs();
    let ymin = ys.iter().copied().fold(T::infinity(), T::min);
    let ymax = ys.iter().copied().fold(T::neg_infinity(), T::max);
    let span = (ymax - ymin).max(T::one());
    let ymean = ys.iter().copied().sum::<T>() / T::from_usize_lossy(ys.len());
    let log_noise_lo = cfg.log_noise_bounds.0.max(cfg.noise_floor.ln());
    let bounds = Bounds {
        lo: [
            T::lit(cfg.log_kappa0_bounds.0),
            T::lit(cfg.log_h_bounds.0),
            T::lit(log_noise_lo),
            ymin - span,
        ],
        hi: [
            T::lit(cfg.log_kappa0_bounds.1),
            T::lit(cfg.log_h_bounds.1),
            T::lit(cfg.log_noise_bounds.1.max(log_noise_lo)),
            ymax + span,
        ],
    };

    let floor = T::lit(cfg.noise_floor);
    let first = [
        init.kappa0.ln(),
        init.h.ln(),
        init.noise_var.max(floor).ln(),
        init.mean_const,
    ];
    let mut starts = vec![first];
    for _ in 1..cfg.restarts.max(1) {
        let mut draw = |(lo, hi): (f64, f64)| T::lit(rng.random_range(lo..=hi));
        starts.push([
            draw(cfg.log_kappa0_bounds),
            draw(cfg.log_h_bounds),
            draw((log_noise_lo, cfg.log_noise_bounds.1.max(log_noise_lo))),
            ymean,
        ]);
    }

    let mut best: Option<([T; 4], T)> = None;
    for start in starts {
        if let Some((x, f)) = minimize_box(data, start, &bounds, cfg) {
            if best.is_none_or(|(_, bf)| f < bf) {
                best = Some((x, f));
            }
        }
    }

    match best {
        Some((x, f)) => FitOutcome {
            hyper: to_hyper(&x),
            nlml: Some(f),
            warning: false,
        },
        None => {
            log::warn!("hyperparameter fit failed on every restart; keeping initial values");
            FitOutcome {
                hyper: *init,
                nlml: None,
                warning: true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::nlml_gradient;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy() -> Dataset<f64> {
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
        let ys = xs.iter().map(|x| (6.0 * x[0]).sin() + 0.3 * x[0]).collect();
        Dataset::new(xs, ys).unwrap()
    }

    #[test]
    fn small_datasets_return_init() {
        let d = Dataset::new(vec![vec![0.1]], vec![2.0]).unwrap();
        let init = GpHyperparams::new(1.0, 0.2, 0.0, 0.0).unwrap();
        let out = fit_hyperparams(&d, &init, &FitConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(out.hyper, init);
        assert!(!out.warning);
    }

    #[test]
    fn interior_minimizer_has_small_gradient() {
        let d = toy();
        let init = GpHyperparams::new(1.0, 0.3, 0.01, 0.0).unwrap();
        let out = fit_hyperparams(&d, &init, &FitConfig::default(), &mut ChaCha8Rng::seed_from_u64(3));
        let hp = out.hyper;
        let lo = (1e-8f64).ln().max(-12.0);
        // gradient only needs to vanish in coordinates that are not pinned to a bound
        let g = nlml_gradient(&d, &hp).unwrap();
        assert!(g.log_kappa0.abs() < 1e-3, "{g:?}");
        assert!(g.log_h.abs() < 1e-3, "{g:?}");
        assert!(g.mean_const.abs() < 1e-3, "{g:?}");
        if hp.noise_var.ln() > lo + 1e-6 {
            assert!(g.log_noise_var.abs() < 1e-3, "{g:?}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let d = toy();
        let init = GpHyperparams::new(1.0, 0.3, 0.01, 0.0).unwrap();
        let a = fit_hyperparams(&d, &init, &FitConfig::default(), &mut ChaCha8Rng::seed_from_u64(9));
        let b = fit_hyperparams(&d, &init, &FitConfig::default(), &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn constant_outputs_drive_signal_to_lower_bound() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let d = Dataset::new(xs, vec![3.25; 6]).unwrap();
        let init = GpHyperparams::new(1.0, 0.3, 0.01, 0.0).unwrap();
        let cfg = FitConfig::default();
        let out = fit_hyperparams(&d, &init, &cfg, &mut ChaCha8Rng::seed_from_u64(2));
        assert!((out.hyper.mean_const - 3.25).abs() < 1e-4, "{:?}", out.hyper);
        assert!((out.hyper.kappa0.ln() - cfg.log_kappa0_bounds.0).abs() < 1e-6, "{:?}", out.hyper);
    }
}
