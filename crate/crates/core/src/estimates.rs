//! Cheap conservative lower bounds for the convexity radius z_max.
//!
//! After whitening by the metric and normalizing the directions orthogonal
//! to `c+` with the Gram matrix of the centered vectors, every bound reduces
//! to a spectral quantity of the normalized tuple `A_hat`:
//!
//! `z_trace <= z_shifted <= z_est <= z_max`, with `z_spectral <= z_est`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::numkernel::{sym_eig, CMatrix, CVector, SymMatrix};
use crate::quadmap::{QuadraticMap, SupportFrame};
use crate::seeds;
use crate::sphere::{maximize_on_sphere, nelder_mead};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    /// `z_est = spread^-2`, `z_trace = 1 / (4 lambda_max(M))`.
    #[default]
    Derived,
    /// `z_est = spread^-4`, `z_trace = 1 / (4 lambda_max(M)^2)`.
    Printed,
}

/// Denominator of the trace correction: the domain dimension or the number
/// of components.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Divisor {
    #[default]
    N,
    M,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateConfig {
    pub mode: EstimateMode,
    pub divisor: Divisor,
    /// Locally improve the default identity shifts.
    pub optimize_mu: bool,
    /// Multistarts for spheres of dimension 2 and up; `None` means `20 k`.
    pub starts: Option<usize>,
    pub grid: usize,
    pub seed: u64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { mode: EstimateMode::Derived, divisor: Divisor::N, optimize_mu: false, starts: None, grid: 1440, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct WhitenedData {
    pub a_tilde: Vec<SymMatrix>,
    pub v_tilde: Vec<CVector>,
    /// `L^{-1}` for `A+ = L L*`, so that `lambda* lambda = A+^{-1}`.
    pub lambda_factor: CMatrix,
}

pub fn whiten(map: &QuadraticMap, frame: &SupportFrame) -> WhitenedData {
    let metric = &frame.metric;
    let a_tilde = map.a().iter().map(|a| metric.whiten_matrix(a)).collect();
    let v_tilde = map.centered_vectors(&frame.x0).iter().map(|d| metric.whiten_vector(d)).collect();
    let n = map.n();
    let lambda_factor = metric.lower().solve_lower_triangular(&CMatrix::identity(n, n)).expect("nonsingular factor");
    WhitenedData { a_tilde, v_tilde, lambda_factor }
}

#[derive(Clone, Debug)]
pub struct NormalizedTuple {
    pub a_hat: Vec<SymMatrix>,
    /// Columns: the Gram-normalized directions, then `c+ / |c+|`, so that
    /// `Lambda^T g Lambda = diag(1, ..., 1, 0)`.
    pub big_lambda: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub degenerate: bool,
    n: usize,
}

impl NormalizedTuple {
    /// A tuple given directly in normalized form.
    pub fn from_matrices(a_hat: Vec<SymMatrix>, n: usize) -> Self {
        let k = a_hat.len();
        Self { a_hat, big_lambda: DMatrix::identity(k + 1, k + 1), g: DMatrix::identity(k + 1, k + 1), degenerate: false, n }
    }

    pub fn dim(&self) -> usize {
        self.a_hat.len()
    }
}

pub fn gram_normalize(data: &WhitenedData, c_plus: &[f64]) -> NormalizedTuple {
    let m = data.v_tilde.len();
    let n = data.a_tilde.first().map_or(0, SymMatrix::n);
    let g = DMatrix::from_fn(m, m, |i, j| data.v_tilde[i].dotc(&data.v_tilde[j]).re);
    let eig = SymmetricEigen::new(g.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let cut = 1e-10 * g.trace().max(0.0);
    let rank = order.iter().filter(|&&i| eig.eigenvalues[i] > cut).count();
    let degenerate = m >= 2 && (g.trace() <= 0.0 || rank < m - 1);

    let mut big_lambda = DMatrix::zeros(m, m);
    let kept = rank.min(m.saturating_sub(1));
    for (col, &i) in order.iter().take(kept).enumerate() {
        let u = eig.eigenvectors.column(i) / eig.eigenvalues[i].sqrt();
        big_lambda.set_column(col, &u);
    }
    let cp = crate::sphere::normalize(c_plus);
    big_lambda.set_column(m - 1, &nalgebra::DVector::from_column_slice(&cp));

    let a_hat = if degenerate {
        vec![]
    } else {
        (0..m - 1)
            .map(|j| {
                let coeffs: Vec<f64> = big_lambda.column(j).iter().copied().collect();
                SymMatrix::combine(&coeffs, &data.a_tilde)
            })
            .collect()
    };
    NormalizedTuple { a_hat, big_lambda, g, degenerate, n }
}

fn starts(config: &EstimateConfig, k: usize) -> usize {
    config.starts.unwrap_or(20 * k)
}

fn spread_at(a: &[SymMatrix], c: &[f64]) -> f64 {
    sym_eig(&SymMatrix::combine(c, a)).map_or(f64::NAN, |e| e.spread())
}

fn lambda_max_at(a: &[SymMatrix], mu: &[f64], c: &[f64]) -> f64 {
    let shift: f64 = c.iter().zip(mu).map(|(x, y)| x * y).sum();
    sym_eig(&SymMatrix::combine(c, a)).map_or(f64::NAN, |e| e.lambda_max()) + shift
}

fn inverse_power(x: f64, p: i32) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        x.powi(-p)
    }
}

/// Largest spectral spread of `c_hat . A_hat` over unit `c_hat`.
pub fn max_spread(tuple: &NormalizedTuple, config: &EstimateConfig) -> f64 {
    let k = tuple.dim();
    let mut rng = seeds::rng(config.seed, "estimate-spread");
    maximize_on_sphere(|c| spread_at(&tuple.a_hat, c), k, starts(config, k), config.grid, &mut rng).1
}

pub fn z_est_spread(tuple: &NormalizedTuple, config: &EstimateConfig) -> f64 {
    if tuple.degenerate {
        return 0.0;
    }
    if tuple.dim() == 0 {
        return f64::INFINITY;
    }
    let s = max_spread(tuple, config);
    match config.mode {
        EstimateMode::Derived => inverse_power(s, 2),
        EstimateMode::Printed => inverse_power(s, 4),
    }
}

/// `max_{|c_hat| = 1} lambda_max(c_hat . (A_hat + mu I))`.
pub fn max_top_eigenvalue(tuple: &NormalizedTuple, mu: &[f64], config: &EstimateConfig) -> f64 {
    let k = tuple.dim();
    let mut rng = seeds::rng(config.seed, "estimate-top");
    maximize_on_sphere(|c| lambda_max_at(&tuple.a_hat, mu, c), k, starts(config, k), config.grid, &mut rng).1
}

/// Default identity shifts `mu_i = -Tr(A_hat_i) / divisor`.
pub fn default_shifts(tuple: &NormalizedTuple, divisor: Divisor) -> Vec<f64> {
    let d = divisor_value(tuple, divisor);
    tuple.a_hat.iter().map(|a| -a.trace() / d).collect()
}

fn divisor_value(tuple: &NormalizedTuple, divisor: Divisor) -> f64 {
    match divisor {
        Divisor::N => tuple.n as f64,
        Divisor::M => (tuple.dim() + 1) as f64,
    }
}

/// `(2 max lambda_max(c_hat . (A_hat + mu I)))^-2`, and the shifts used.
pub fn z_lower_spectral(tuple: &NormalizedTuple, mu: Option<&[f64]>, config: &EstimateConfig) -> (f64, Vec<f64>) {
    let k = tuple.dim();
    if tuple.degenerate {
        return (0.0, vec![0.0; k]);
    }
    if k == 0 {
        return (f64::INFINITY, vec![]);
    }
    let mut mu: Vec<f64> = mu.map_or_else(|| default_shifts(tuple, config.divisor), <[f64]>::to_vec);
    let mut top = max_top_eigenvalue(tuple, &mu, config);
    if config.optimize_mu {
        let coarse = EstimateConfig { grid: 360, starts: Some(4 * k), ..config.clone() };
        let (better, _) = nelder_mead(|m| max_top_eigenvalue(tuple, m, &coarse), &mu, 0.1, 200, 1e-10);
        let t = max_top_eigenvalue(tuple, &better, config);
        if t < top {
            top = t;
            mu = better;
        }
    }
    (inverse_power(2.0 * top, 2), mu)
}

/// Trace bound from `lambda_max(B)^2 <= Tr(B^2)` for the trace-shifted
/// combination, together with the matrix `M`.
pub fn z_lower_trace(tuple: &NormalizedTuple, config: &EstimateConfig) -> (f64, DMatrix<f64>) {
    let k = tuple.dim();
    if tuple.degenerate {
        return (0.0, DMatrix::zeros(k, k));
    }
    if k == 0 {
        return (f64::INFINITY, DMatrix::zeros(0, 0));
    }
    let d = divisor_value(tuple, config.divisor);
    let tr: Vec<f64> = tuple.a_hat.iter().map(SymMatrix::trace).collect();
    let m = DMatrix::from_fn(k, k, |i, j| {
        let prod: CMatrix = tuple.a_hat[i].matrix() * tuple.a_hat[j].matrix();
        prod.trace().re - tr[i] * tr[j] / d
    });
    let top = SymmetricEigen::new(m.clone()).eigenvalues.max();
    let z = match config.mode {
        EstimateMode::Derived => 0.25 * inverse_power(top, 1),
        EstimateMode::Printed => 0.25 * inverse_power(top, 2),
    };
    (z, m)
}

#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub z_est: f64,
    pub z_spectral: f64,
    pub z_shifted: f64,
    pub z_trace: f64,
    pub m_matrix: DMatrix<f64>,
    pub mu_used: Vec<f64>,
    pub divisor_used: f64,
    pub degenerate: bool,
    pub mode: EstimateMode,
}

impl EstimateReport {
    /// Whether `z_trace <= z_shifted <= z_est` and `z_spectral <= z_est`,
    /// up to a relative slack.
    pub fn is_ordered(&self, slack: f64) -> bool {
        let le = |a: f64, b: f64| a <= b * (1.0 + slack) + slack || b.is_infinite();
        le(self.z_trace, self.z_shifted) && le(self.z_shifted, self.z_est) && le(self.z_spectral, self.z_est)
    }
}

pub fn estimate_chain(map: &QuadraticMap, frame: &SupportFrame, config: &EstimateConfig) -> EstimateReport {
    let data = whiten(map, frame);
    let tuple = gram_normalize(&data, &frame.c_plus);
    let z_est = z_est_spread(&tuple, config);
    let zero = vec![0.0; tuple.dim()];
    let (z_spectral, _) = z_lower_spectral(&tuple, Some(&zero), config);
    let (z_shifted, mu_used) = z_lower_spectral(&tuple, None, config);
    let (z_trace, m_matrix) = z_lower_trace(&tuple, config);
    let report = EstimateReport {
        z_est,
        z_spectral,
        z_shifted,
        z_trace,
        m_matrix,
        mu_used,
        divisor_used: divisor_value(&tuple, config.divisor),
        degenerate: tuple.degenerate,
        mode: config.mode,
    };
    debug_assert!(config.mode != EstimateMode::Derived || config.divisor != Divisor::N || report.is_ordered(1e-9));
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{flat_edge_pair, identity_map};
    use crate::generators::{random_map, random_unitary};
    use crate::numkernel::{Cx, Field};
    use crate::quadmap::support_frame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> EstimateConfig {
        EstimateConfig::default()
    }

    #[test]
    fn flat_edge_pair_chain() {
        let map = flat_edge_pair();
        let frame = support_frame(&map, &[1.0, 0.0]).unwrap();
        let data = whiten(&map, &frame);
        assert!((data.lambda_factor.clone() - CMatrix::identity(2, 2)).norm() < 1e-15);
        assert!(data.v_tilde[0].norm() < 1e-15);
        assert!((data.v_tilde[1][1].re - 1.0).abs() < 1e-15);
        let t = gram_normalize(&data, &frame.c_plus);
        assert!(!t.degenerate);
        assert_eq!(t.dim(), 1);
        let a = t.a_hat[0].matrix();
        assert!((a[(0, 0)].re.abs() - 1.0).abs() < 1e-15 && (a[(1, 1)].re + a[(0, 0)].re).abs() < 1e-15);

        let r = estimate_chain(&map, &frame, &cfg());
        assert!((r.z_est - 0.25).abs() < 1e-12);
        assert!((r.z_spectral - 0.25).abs() < 1e-12);
        assert!((r.z_shifted - 0.25).abs() < 1e-12);
        assert!((r.z_trace - 0.125).abs() < 1e-12);
        assert!((r.m_matrix[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn whitening_factor_and_spread() {
        let map = QuadraticMap::homogeneous(
            Field::Real,
            vec![SymMatrix::diag(Field::Real, &[4.0, 1.0]), SymMatrix::diag(Field::Real, &[1.0, -3.0])],
        )
        .unwrap();
        let frame = support_frame(&map, &[1.0, 0.0]).unwrap();
        let data = whiten(&map, &frame);
        let l = &data.lambda_factor;
        assert!((l[(0, 0)].re - 0.5).abs() < 1e-15 && (l[(1, 1)].re - 1.0).abs() < 1e-15);
        let check = l.adjoint() * l * frame.metric.plus_matrix().matrix();
        assert!((check - CMatrix::identity(2, 2)).norm() < 1e-12);
        // Spread of c.A_tilde equals the generalized spread of c.A.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let c = crate::sphere::random_unit(&mut rng, 2);
            let s1 = sym_eig(&SymMatrix::combine(&c, &data.a_tilde)).unwrap().spread();
            let g = crate::numkernel::gen_eig_min(&map.combined_matrix(&c), &frame.metric, 1e-8).unwrap();
            let s2 = g.values.last().unwrap() - g.values[0];
            assert!((s1 - s2).abs() < 1e-9 * (1.0 + s1));
        }
    }

    #[test]
    fn centered_vectors_vanish_along_cplus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..10 {
            let (map, c_plus) = random_map(&mut rng, 3, 3, i % 2 == 0);
            let frame = support_frame(&map, &c_plus).unwrap();
            let data = whiten(&map, &frame);
            let mut s = CVector::zeros(3);
            for (c, v) in c_plus.iter().zip(&data.v_tilde) {
                s += v * Cx::new(*c, 0.0);
            }
            assert!(s.norm() < 1e-10);
            let t = gram_normalize(&data, &c_plus);
            let d = t.big_lambda.transpose() * &t.g * &t.big_lambda;
            let mut expect = DMatrix::identity(3, 3);
            expect[(2, 2)] = 0.0;
            assert!((d - expect).norm() < 1e-9);
            // Each unit c_hat is a direction c with c* g c = 1.
            for _ in 0..5 {
                let ch = crate::sphere::random_unit(&mut rng, 2);
                let c = t.big_lambda.columns(0, 2) * nalgebra::DVector::from_column_slice(&ch);
                assert!(((c.transpose() * &t.g * &c)[(0, 0)] - 1.0).abs() < 1e-9);
                let lhs = SymMatrix::combine(c.as_slice(), &data.a_tilde);
                let rhs = SymMatrix::combine(&ch, &t.a_hat);
                assert!((lhs.matrix() - rhs.matrix()).norm() < 1e-9 * (1.0 + lhs.frobenius_norm()));
            }
        }
    }

    #[test]
    fn degenerate_gram_gives_zero() {
        let map = QuadraticMap::homogeneous(
            Field::Real,
            vec![SymMatrix::identity(Field::Real, 2), SymMatrix::diag(Field::Real, &[1.0, -1.0])],
        )
        .unwrap();
        let frame = support_frame(&map, &[1.0, 0.0]).unwrap();
        let r = estimate_chain(&map, &frame, &cfg());
        assert!(r.degenerate);
        assert_eq!((r.z_est, r.z_spectral, r.z_shifted, r.z_trace), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn single_component_is_vacuous() {
        let map = identity_map(3);
        let frame = support_frame(&map, &[1.0]).unwrap();
        let r = estimate_chain(&map, &frame, &cfg());
        assert!(r.z_est.is_infinite() && r.z_trace.is_infinite() && !r.degenerate);
    }

    #[test]
    fn spread_scaling_and_zero() {
        let t = NormalizedTuple::from_matrices(vec![SymMatrix::diag(Field::Real, &[3.0, -3.0])], 2);
        assert!((z_est_spread(&t, &cfg()) - 1.0 / 36.0).abs() < 1e-15);
        let t = NormalizedTuple::from_matrices(vec![SymMatrix::zeros(Field::Real, 2)], 2);
        assert!(z_est_spread(&t, &cfg()).is_infinite());
        let lit = EstimateConfig { mode: EstimateMode::Printed, ..cfg() };
        let t = NormalizedTuple::from_matrices(vec![SymMatrix::diag(Field::Real, &[1.0, -1.0])], 2);
        assert!((z_est_spread(&t, &lit) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn identity_shift_improves_bound() {
        let t = NormalizedTuple::from_matrices(vec![SymMatrix::diag(Field::Real, &[2.0, 0.0])], 2);
        let (shifted, mu) = z_lower_spectral(&t, None, &cfg());
        assert_eq!(mu, vec![-1.0]);
        assert!((shifted - 0.25).abs() < 1e-15);
        let (plain, _) = z_lower_spectral(&t, Some(&[0.0]), &cfg());
        assert!((plain - 1.0 / 16.0).abs() < 1e-15);
        // Past the optimum, larger shifts only hurt.
        let mut last = f64::INFINITY;
        for mu in [0.0, 10.0, 100.0, 1000.0] {
            let (z, _) = z_lower_spectral(&t, Some(&[mu]), &cfg());
            assert!(z <= last);
            last = z;
        }
    }

    #[test]
    fn pure_trace_matrix_is_vacuous() {
        let t = NormalizedTuple::from_matrices(vec![SymMatrix::identity(Field::Real, 2)], 2);
        let (z, m) = z_lower_trace(&t, &cfg());
        assert!(z.is_infinite());
        assert!(m[(0, 0)].abs() < 1e-15);
    }

    #[test]
    fn chain_is_ordered_and_basis_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for i in 0..30 {
            let (map, c_plus) = random_map(&mut rng, 2 + i % 2, 2 + i % 4, i % 3 == 0);
            let frame = support_frame(&map, &c_plus).unwrap();
            let r = estimate_chain(&map, &frame, &cfg());
            assert!(r.is_ordered(1e-9), "{i}: {r:?}");
            assert!(r.z_est > 0.0);
            if i % 5 == 0 {
                let field = map.field();
                let q = random_unitary(&mut rng, map.n(), field);
                let mapped = map.change_basis(&q).unwrap();
                let r2 = estimate_chain(&mapped, &support_frame(&mapped, &c_plus).unwrap(), &cfg());
                for (a, b) in [(r.z_est, r2.z_est), (r.z_shifted, r2.z_shifted), (r.z_trace, r2.z_trace)] {
                    assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300), "{a} vs {b}");
                }
            }
        }
    }
}
