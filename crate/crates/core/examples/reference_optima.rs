//! Recomputes the reference optima: dense grid scan, then a Nelder-Mead
//! polish (coordinates clamped to the box) from the best grid points.
//!
//!     cargo run --release -p abo-core --example reference_optima

use abo::benchmarks::{CaseName, CurrinVariant};
use abo::ObjectiveCase;

fn grid_points(case: &ObjectiveCase, per_axis: usize) -> Vec<Vec<f64>> {
    let d = case.dim();
    let (lo, hi) = (case.domain.lower(), case.domain.upper());
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut k| {
            (0..d)
                .map(|j| {
                    let i = k % per_axis;
                    k /= per_axis;
                    lo[j] + (hi[j] - lo[j]) * i as f64 / (per_axis - 1) as f64
                })
                .collect()
        })
        .collect()
}

fn nelder_mead(case: &ObjectiveCase, start: &[f64], step: f64) -> (Vec<f64>, f64) {
    let d = start.len();
    let f = |x: &[f64]| {
        let mut y = x.to_vec();
        case.domain.clip(&mut y);
        -case.hf(&y).unwrap()
    };
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for j in 0..d {
        let mut p = start.to_vec();
        p[j] += if p[j] + step <= case.domain.upper()[j] { step } else { -step };
        simplex.push(p);
    }
    let mut vals: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..20_000 {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if (vals[d] - vals[0]).abs() < 1e-15 {
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|j| simplex[..d].iter().map(|p| p[j]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..d).map(|j| centroid[j] + t * (simplex[d][j] - centroid[j])).collect() };
        let r = along(-1.0);
        let fr = f(&r);
        if fr < vals[0] {
            let e = along(-2.0);
            let fe = f(&e);
            (simplex[d], vals[d]) = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < vals[d - 1] {
            (simplex[d], vals[d]) = (r, fr);
        } else {
            let c = along(0.5);
            let fc = f(&c);
            if fc < vals[d] {
                (simplex[d], vals[d]) = (c, fc);
            } else {
                for i in 1..=d {
                    simplex[i] = (0..d).map(|j| 0.5 * (simplex[0][j] + simplex[i][j])).collect();
                    vals[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut x = simplex[0].clone();
    case.domain.clip(&mut x);
    let v = case.hf(&x).unwrap();
    (x, v)
}

fn main() {
    for name in CaseName::ALL {
        let case = ObjectiveCase::new(name, CurrinVariant::Printed);
        let per_axis = match case.dim() {
            1 => 1_000_001,
            2 => 2001,
            _ => 41,
        };
        let mut scored: Vec<(f64, Vec<f64>)> =
            grid_points(&case, per_axis).into_iter().map(|x| (case.hf(&x).unwrap(), x)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        let step = 1e-2 * case.domain.diagonal();
        let (x, v) = scored
            .iter()
            .take(20)
            .map(|(_, x)| nelder_mead(&case, x, step))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let best = if v >= scored[0].0 { (x, v) } else { (scored[0].1.clone(), scored[0].0) };
        println!("{name}: f* = {:?} at {:?} (frozen {:?})", best.1, best.0, case.f_star);
    }
}
