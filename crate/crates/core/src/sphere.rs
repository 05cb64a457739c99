//! Small derivative-free optimizers on unit spheres.

use rand::Rng;
use rand_distr::StandardNormal;

pub fn normalize(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn random_unit<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        if norm(&v) > 1e-8 {
            return normalize(&v);
        }
    }
}

/// Orthonormal basis of the orthogonal complement of `c` in `R^m`.
pub fn orthonormal_complement(c: &[f64]) -> Vec<Vec<f64>> {
    let m = c.len();
    let mut basis: Vec<Vec<f64>> = vec![normalize(c)];
    // Gram-Schmidt over the coordinate axes, taking the most independent first.
    let mut axes: Vec<usize> = (0..m).collect();
    axes.sort_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()).then(a.cmp(&b)));
    for &i in &axes {
        if basis.len() == m {
            break;
        }
        let mut e = vec![0.0; m];
        e[i] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&e, b);
                for (x, y) in e.iter_mut().zip(b) {
                    *x -= p * y;
                }
            }
        }
        if norm(&e) > 1e-6 {
            basis.push(normalize(&e));
        }
    }
    basis.remove(0);
    basis
}

/// `sum_j coords_j basis_j`.
pub fn combine(coords: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let m = basis.first().map_or(0, |b| b.len());
    let mut out = vec![0.0; m];
    for (c, b) in coords.iter().zip(basis) {
        for (o, x) in out.iter_mut().zip(b) {
            *o += c * x;
        }
    }
    out
}

pub fn angle_point(theta: f64) -> Vec<f64> {
    vec![theta.cos(), theta.sin()]
}

/// Golden-section minimization of `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Indices of cyclic local minima of `values` (plateaus report their first index).
pub fn cyclic_local_minima(values: &[f64]) -> Vec<usize> {
    let g = values.len();
    (0..g)
        .filter(|&i| {
            let prev = values[(i + g - 1) % g];
            let next = values[(i + 1) % g];
            values[i] < prev && values[i] <= next
        })
        .collect()
}

/// Nelder-Mead minimization over the unit sphere in `R^k`, working in a
/// tangent chart at `start` with the retraction `p -> p / |p|`. The chart is
/// re-centred at the incumbent a few times.
pub fn nelder_mead_sphere<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let k = start.len();
    let mut center = normalize(start);
    let mut best_val = f(&center);
    if k < 2 {
        return (center, best_val);
    }
    let mut step = step;
    for _restart in 0..3 {
        let tangent = orthonormal_complement(&center);
        let chart = |t: &[f64]| -> Vec<f64> {
            let mut p = center.clone();
            for (ti, b) in t.iter().zip(&tangent) {
                for (pi, bi) in p.iter_mut().zip(b) {
                    *pi += ti * bi;
                }
            }
            normalize(&p)
        };
        let (t, val) = nelder_mead(|t| f(&chart(t)), &vec![0.0; k - 1], step, max_iter, tol);
        let point = chart(&t);
        if val <= best_val {
            best_val = val;
            center = point;
        }
        step *= 0.1;
    }
    (center, best_val)
}

/// Plain Nelder-Mead in `R^d`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += step;
        let v = f(&p);
        simplex.push((p, v));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex
            .iter()
            .skip(1)
            .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= tol {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (p, _) in simplex.iter().take(d) {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc = if fr < worst.1 { along(0.5) } else { along(-0.5) };
            let fc = f(&xc);
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = entry.0.iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
                    let v = f(&p);
                    *entry = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Global maximization of `f` over the unit sphere in `R^k`: both points of
/// the 0-sphere, a fine angular grid with golden-section refinement on
/// circles, and multistart Nelder-Mead above that.
pub fn maximize_on_sphere<F: FnMut(&[f64]) -> f64, R: Rng>(mut f: F, k: usize, starts: usize, grid: usize, rng: &mut R) -> (Vec<f64>, f64) {
    match k {
        0 => (vec![], f64::NEG_INFINITY),
        1 => {
            let (a, b) = (f(&[1.0]), f(&[-1.0]));
            if a >= b {
                (vec![1.0], a)
            } else {
                (vec![-1.0], b)
            }
        }
        2 => {
            let g = grid.max(8);
            let step = std::f64::consts::TAU / g as f64;
            let neg: Vec<f64> = (0..g).map(|i| -f(&angle_point(i as f64 * step))).collect();
            let mut best = (angle_point(0.0), f64::NEG_INFINITY);
            for i in cyclic_local_minima(&neg).into_iter().chain([0]) {
                let c = i as f64 * step;
                let (t, v) = golden_section(|t| -f(&angle_point(t)), c - step, c + step, 1e-14);
                if -v > best.1 {
                    best = (angle_point(t), -v);
                }
                if -neg[i] > best.1 {
                    best = (angle_point(c), -neg[i]);
                }
            }
            best
        }
        _ => {
            let mut best = (vec![], f64::NEG_INFINITY);
            for s in 0..starts.max(1) {
                let start = if s < k {
                    let mut e = vec![0.0; k];
                    e[s] = 1.0;
                    e
                } else {
                    random_unit(rng, k)
                };
                let (p, v) = nelder_mead_sphere(|c| -f(c), &start, 0.3, 2000, 1e-12);
                if -v > best.1 {
                    best = (p, -v);
                }
            }
            best
        }
    }
}
