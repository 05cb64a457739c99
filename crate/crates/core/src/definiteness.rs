//! Search for a positive-definite combination `c+ . A` of a matrix tuple.
//!
//! `lambda_min(c . A)` is concave in `c`, so projected supergradient ascent on
//! the unit sphere climbs towards the best direction; several starts cover the
//! sphere, and a derivative-free polish settles on the kink where the bottom
//! eigenvalue is degenerate. Any reported direction is re-checked afterwards.

use rand::Rng;
use serde::Serialize;

use crate::numkernel::{is_positive_definite, sym_eig, SymMatrix};
use crate::sphere::{angle_point, golden_section, nelder_mead_sphere, normalize, random_unit};

#[derive(Clone, Debug, Serialize)]
pub struct DefinitenessConfig {
    /// Number of ascent starts; `None` means `4 m`.
    pub starts: Option<usize>,
    pub max_iter: usize,
    /// A direction counts as definite when `lambda_min > tol * max |A_i|_F`.
    pub tol: f64,
}

impl Default for DefinitenessConfig {
    fn default() -> Self {
        Self { starts: None, max_iter: 500, tol: 1e-10 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DefinitenessReport {
    pub found: bool,
    /// Best direction found (unit length), whether or not it is definite.
    pub c_plus: Vec<f64>,
    pub lambda_min_at_c: f64,
    pub iterations: usize,
}

fn objective(a: &[SymMatrix], c: &[f64], scale: f64) -> f64 {
    sym_eig(&SymMatrix::combine(c, a)).map_or(f64::NEG_INFINITY, |e| e.lambda_min() / scale)
}

/// Maximizes `lambda_min(c . A)` over the unit sphere. A `found = false`
/// report only means that no definite direction was found within the budget.
pub fn find_positive_direction<R: Rng>(a: &[SymMatrix], config: &DefinitenessConfig, rng: &mut R) -> DefinitenessReport {
    let m = a.len();
    let scale = a.iter().map(SymMatrix::frobenius_norm).fold(0.0, f64::max);
    if m == 0 || scale == 0.0 {
        return DefinitenessReport { found: false, c_plus: vec![0.0; m], lambda_min_at_c: 0.0, iterations: 0 };
    }
    let starts = config.starts.unwrap_or(4 * m).max(1);
    let mut start_points: Vec<Vec<f64>> = Vec::with_capacity(starts);
    for i in 0..m {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; m];
            e[i] = sign;
            start_points.push(e);
        }
    }
    start_points.truncate(starts);
    while start_points.len() < starts {
        start_points.push(random_unit(rng, m));
    }

    let mut best = start_points[0].clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut iterations = 0;
    for start in &start_points {
        let mut c = start.clone();
        for t in 0..config.max_iter {
            iterations += 1;
            let eig = match sym_eig(&SymMatrix::combine(&c, a)) {
                Ok(e) => e,
                Err(_) => break,
            };
            let val = eig.lambda_min() / scale;
            if val > best_val {
                best_val = val;
                best = c.clone();
            }
            let u = eig.vector(0);
            let g: Vec<f64> = a.iter().map(|ai| ai.quad_form(&u) / scale).collect();
            let along: f64 = g.iter().zip(&c).map(|(x, y)| x * y).sum();
            let tangent: Vec<f64> = g.iter().zip(&c).map(|(x, y)| x - along * y).collect();
            let tn = crate::sphere::norm(&tangent);
            if tn < 1e-14 {
                break;
            }
            let step = 0.5 / ((t + 1) as f64).sqrt();
            let next: Vec<f64> = c.iter().zip(&tangent).map(|(x, d)| x + step * d / tn).collect();
            c = normalize(&next);
        }
    }

    // Polish around the incumbent.
    let polished = if m == 2 {
        let theta0 = best[1].atan2(best[0]);
        let (theta, _) = golden_section(
            |th| -objective(a, &angle_point(th), scale),
            theta0 - 0.1,
            theta0 + 0.1,
            1e-15,
        );
        angle_point(theta)
    } else if m > 2 {
        nelder_mead_sphere(|c| -objective(a, c, scale), &best, 0.02, 4000, 1e-14).0
    } else {
        best.clone()
    };
    if objective(a, &polished, scale) >= best_val {
        best = polished;
    }

    let combo = SymMatrix::combine(&best, a);
    let (pd, lambda_min) = is_positive_definite(&combo).unwrap_or((false, f64::NEG_INFINITY));
    let found = pd && lambda_min > config.tol * scale;
    DefinitenessReport { found, c_plus: best, lambda_min_at_c: lambda_min, iterations }
}

/// Accepts a user-supplied direction when it passes the definiteness check.
pub fn check_direction(a: &[SymMatrix], c_plus: &[f64]) -> DefinitenessReport {
    let combo = SymMatrix::combine(c_plus, a);
    let (pd, lambda_min) = is_positive_definite(&combo).unwrap_or((false, f64::NEG_INFINITY));
    DefinitenessReport { found: pd, c_plus: c_plus.to_vec(), lambda_min_at_c: lambda_min, iterations: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::random_hermitian;
    use crate::numkernel::Field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn run(a: &[SymMatrix], seed: u64) -> DefinitenessReport {
        find_positive_direction(a, &DefinitenessConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn identity_plus_saddle() {
        let a = [SymMatrix::identity(Field::Real, 2), SymMatrix::diag(Field::Real, &[1.0, -1.0])];
        let r = run(&a, 0);
        assert!(r.found);
        assert!(r.c_plus[0] > r.c_plus[1].abs());
        assert!((r.c_plus[0] - 1.0).abs() < 1e-12 && r.c_plus[1].abs() < 1e-12);
        assert!((r.lambda_min_at_c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lone_saddle_is_not_definite() {
        let r = run(&[SymMatrix::diag(Field::Real, &[1.0, -1.0])], 0);
        assert!(!r.found);
    }

    #[test]
    fn coordinate_projectors_sum_to_identity() {
        let a = [SymMatrix::diag(Field::Real, &[1.0, 0.0]), SymMatrix::diag(Field::Real, &[0.0, 1.0])];
        let r = run(&a, 1);
        assert!(r.found);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.c_plus[0] - s).abs() < 1e-9 && (r.c_plus[1] - s).abs() < 1e-9);
        assert!((r.lambda_min_at_c - s).abs() < 1e-9);
    }

    #[test]
    fn found_directions_are_sound_and_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut found = 0;
        for seed in 0..200u64 {
            let m = 1 + (seed as usize) % 4;
            let n = 2 + (seed as usize) % 4;
            let field = if seed % 2 == 0 { Field::Real } else { Field::Complex };
            let mut a: Vec<SymMatrix> = (0..m).map(|_| random_hermitian(&mut rng, n, field)).collect();
            if seed % 3 == 0 {
                a[0] = a[0].shifted(2.0);
            }
            let r = run(&a, seed);
            if r.found {
                found += 1;
                let combo = SymMatrix::combine(&r.c_plus, &a);
                // Independent check through a Cholesky factorization.
                assert!(nalgebra::Cholesky::new(combo.matrix().clone()).is_some());
                assert!(r.lambda_min_at_c > 0.0);
            }
            if seed % 10 == 0 {
                let scaled: Vec<SymMatrix> = a.iter().map(|x| x.scaled(3.7)).collect();
                assert_eq!(run(&scaled, seed).found, r.found);
            }
        }
        assert!(found > 20);
    }

    #[test]
    fn user_direction_is_checked() {
        let a = [SymMatrix::identity(Field::Real, 2), SymMatrix::diag(Field::Real, &[1.0, -1.0])];
        assert!(check_direction(&a, &[1.0, 0.5]).found);
        assert!(!check_direction(&a, &[0.0, 1.0]).found);
    }
}
