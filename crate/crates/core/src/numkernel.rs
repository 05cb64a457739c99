//! Dense kernels for small hermitian matrices.
//!
//! Every matrix is stored over complex scalars; a real-symmetric matrix is a
//! hermitian matrix with vanishing imaginary parts and keeps [`Field::Real`]
//! as a tag so that callers sample and report in the right field.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Cx = Complex<f64>;
pub type CMatrix = DMatrix<Cx>;
pub type CVector = DVector<Cx>;

/// Default relative threshold below which an eigenvalue is treated as zero.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

/// A real-symmetric or complex-hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    field: Field,
    data: CMatrix,
}

impl SymMatrix {
    /// Builds a matrix, replacing `data` by its hermitian part.
    pub fn new(field: Field, data: CMatrix) -> Result<Self> {
        Self::with_asymmetry(field, data).map(|(m, _)| m)
    }

    /// Like [`SymMatrix::new`], also returning the largest entrywise deviation
    /// from hermiticity that was removed.
    pub fn with_asymmetry(field: Field, data: CMatrix) -> Result<(Self, f64)> {
        let n = data.nrows();
        if n == 0 {
            return Err(Error::InvalidMatrix("matrix must be at least 1x1".into()));
        }
        if data.ncols() != n {
            return Err(Error::InvalidMatrix(format!(
                "matrix is {}x{}, expected square",
                n,
                data.ncols()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        if field == Field::Real && data.iter().any(|z| z.im != 0.0) {
            return Err(Error::InvalidMatrix(
                "real field matrix has imaginary entries".into(),
            ));
        }
        let adj = data.adjoint();
        let asymmetry = (&data - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max) / 2.0;
        let mut sym = (&data + &adj) * Cx::new(0.5, 0.0);
        for i in 0..n {
            sym[(i, i)].im = 0.0;
        }
        Ok((Self { field, data: sym }, asymmetry))
    }

    /// Real matrix from row-major entries.
    pub fn real(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let data = CMatrix::from_fn(n, n, |i, j| Cx::new(entries[i * n + j], 0.0));
        Self::new(Field::Real, data)
    }

    pub fn diag(field: Field, diagonal: &[f64]) -> Self {
        let n = diagonal.len();
        let data = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Cx::new(diagonal[i], 0.0)
            } else {
                Cx::new(0.0, 0.0)
            }
        });
        Self { field, data }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        Self { field, data: CMatrix::identity(n, n) }
    }

    pub fn zeros(field: Field, n: usize) -> Self {
        Self { field, data: CMatrix::zeros(n, n) }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    /// Reinterprets the matrix in `field`. Promoting to complex always works.
    pub fn with_field(&self, field: Field) -> Result<Self> {
        Self::new(field, self.data.clone())
    }

    pub fn is_real_valued(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.data[(i, i)].re).sum()
    }

    /// `Re(x* M x)`.
    pub fn quad_form(&self, x: &CVector) -> f64 {
        x.dotc(&(&self.data * x)).re
    }

    pub fn mul_vec(&self, x: &CVector) -> CVector {
        &self.data * x
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { field: self.field, data: &self.data * Cx::new(alpha, 0.0) }
    }

    /// `self + mu * I`.
    pub fn shifted(&self, mu: f64) -> Self {
        let mut data = self.data.clone();
        for i in 0..self.n() {
            data[(i, i)].re += mu;
        }
        Self { field: self.field, data }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        Self { field: join_fields(self.field, other.field), data: &self.data + &other.data }
    }

    /// Congruence `Q* M Q` for a square `Q`.
    pub fn congruence(&self, q: &CMatrix) -> Result<Self> {
        let field = if q.iter().all(|z| z.im == 0.0) { self.field } else { Field::Complex };
        Self::new(field, q.adjoint() * &self.data * q)
    }

    /// Linear combination `sum_i c_i M_i` of matrices of equal size.
    pub fn combine(coeffs: &[f64], mats: &[SymMatrix]) -> Self {
        assert_eq!(coeffs.len(), mats.len(), "coefficient count mismatch");
        assert!(!mats.is_empty(), "empty matrix tuple");
        let n = mats[0].n();
        let field = mats.iter().fold(Field::Real, |f, m| join_fields(f, m.field));
        let mut data = CMatrix::zeros(n, n);
        for (c, m) in coeffs.iter().zip(mats) {
            if *c != 0.0 {
                data += &m.data * Cx::new(*c, 0.0);
            }
        }
        Self { field, data }
    }
}

pub(crate) fn join_fields(a: Field, b: Field) -> Field {
    if a == Field::Complex || b == Field::Complex {
        Field::Complex
    } else {
        Field::Real
    }
}

/// Eigendecomposition with eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn lambda_min(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn spread(&self) -> f64 {
        self.lambda_max() - self.lambda_min()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// Number of eigenvalues within `tol * max(1, spread)` of the smallest one.
    pub fn bottom_multiplicity(&self, tol: f64) -> usize {
        let cut = self.lambda_min() + tol * self.spread().max(1.0);
        self.values.iter().take_while(|&&l| l <= cut).count()
    }

    /// Reconstructs `sum_k lambda_k u_k u_k*`.
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&l| Cx::new(l, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition, eigenvalues ascending.
pub fn sym_eig(m: &SymMatrix) -> Result<Eigen> {
    if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let n = m.n();
    let (values, vectors): (Vec<f64>, CMatrix) = if m.is_real_valued() {
        let re = m.data.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors.map(|x| Cx::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::new(m.data.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(Eigen { values: sorted_values, vectors: sorted_vectors })
}

/// A positive-definite matrix `A+` with its Cholesky factor `A+ = L L*`
/// (so the upper factor is `U = L*`).
#[derive(Clone, Debug)]
pub struct Metric {
    plus: SymMatrix,
    lower: CMatrix,
}

impl Metric {
    pub fn new(plus: SymMatrix) -> Result<Self> {
        let lambda_min = sym_eig(&plus)?.lambda_min();
        if lambda_min <= 0.0 {
            return Err(Error::NotPositiveDefinite { lambda_min });
        }
        let chol = Cholesky::new(plus.data.clone())
            .ok_or(Error::NotPositiveDefinite { lambda_min })?;
        Ok(Self { lower: chol.unpack(), plus })
    }

    pub fn identity(field: Field, n: usize) -> Self {
        Self { plus: SymMatrix::identity(field, n), lower: CMatrix::identity(n, n) }
    }

    pub fn plus_matrix(&self) -> &SymMatrix {
        &self.plus
    }

    pub fn n(&self) -> usize {
        self.plus.n()
    }

    pub fn lower(&self) -> &CMatrix {
        &self.lower
    }

    pub fn upper(&self) -> CMatrix {
        self.lower.adjoint()
    }

    /// `A+^{-1} b`.
    pub fn solve(&self, b: &CVector) -> CVector {
        let y = self.lower.solve_lower_triangular(b).expect("nonsingular factor");
        self.lower.ad_solve_lower_triangular(&y).expect("nonsingular factor")
    }

    /// `L^{-1} M L^{-*}`: the matrix of `M` in coordinates where `A+` is the identity.
    pub fn whiten_matrix(&self, m: &SymMatrix) -> SymMatrix {
        let y = self.lower.solve_lower_triangular(&m.data).expect("nonsingular factor");
        let z = self.lower.solve_lower_triangular(&y.adjoint()).expect("nonsingular factor");
        let field = join_fields(m.field, self.plus.field);
        SymMatrix::new(field, z.adjoint()).expect("whitened matrix stays finite")
    }

    /// `L^{-1} w`.
    pub fn whiten_vector(&self, w: &CVector) -> CVector {
        self.lower.solve_lower_triangular(w).expect("nonsingular factor")
    }

    /// `L^{-*} y`, the inverse of the whitening change of variables.
    pub fn unwhiten(&self, y: &CVector) -> CVector {
        self.lower.ad_solve_lower_triangular(y).expect("nonsingular factor")
    }
}

/// Smallest generalized eigenvalue of a pencil together with its eigenspace.
#[derive(Clone, Debug)]
pub struct GenEigMin {
    pub lambda_min: f64,
    /// Columns are orthonormal in the `A+` inner product.
    pub eigenspace: CMatrix,
    /// Full generalized spectrum, ascending.
    pub values: Vec<f64>,
}

/// Smallest generalized eigenvalue of `M` with respect to the metric `P`.
pub fn gen_eig_min(m: &SymMatrix, p: &Metric, kernel_tol: f64) -> Result<GenEigMin> {
    if m.n() != p.n() {
        return Err(Error::InvalidInput(format!(
            "pencil dimensions differ: {} vs {}",
            m.n(),
            p.n()
        )));
    }
    let eig = sym_eig(&p.whiten_matrix(m))?;
    let mult = eig.bottom_multiplicity(kernel_tol);
    let mut space = CMatrix::zeros(m.n(), mult);
    for k in 0..mult {
        space.set_column(k, &p.unwhiten(&eig.vector(k)));
    }
    Ok(GenEigMin { lambda_min: eig.lambda_min(), eigenspace: space, values: eig.values })
}

/// Outcome of a minimum-norm solve `B x = w` with `B` positive semidefinite.
#[derive(Clone, Debug)]
pub struct ConsistentSolve {
    /// Minimum-norm solution of the range part of the system.
    pub solution: CVector,
    /// Norm of the projection of `w` onto `ker(B)`.
    pub kernel_residual: f64,
    pub consistent: bool,
    pub kernel_dim: usize,
    /// The projection of `w` onto `ker(B)`.
    pub kernel_part: CVector,
}

/// Spectral pseudoinverse solve. `tol` is relative: eigenvalues at most
/// `tol * max(1, lambda_max)` count as zero, and the system is consistent
/// when the kernel residual is at most `tol * max(1, |w|)`.
pub fn min_norm_solve(b: &SymMatrix, w: &CVector, tol: f64) -> Result<ConsistentSolve> {
    if w.len() != b.n() {
        return Err(Error::InvalidInput(format!(
            "right-hand side has length {}, expected {}",
            w.len(),
            b.n()
        )));
    }
    let eig = sym_eig(b)?;
    let scale = eig.values.iter().fold(1.0_f64, |s, l| s.max(l.abs()));
    if eig.lambda_min() < -tol * scale {
        return Err(Error::NotPsd { lambda_min: eig.lambda_min() });
    }
    Ok(solve_in_eigenbasis(&eig, 0.0, w, tol))
}

/// Solves `(M - shift I) x = w` given the eigendecomposition of `M`, treating
/// `M - shift I` as positive semidefinite.
pub(crate) fn solve_in_eigenbasis(eig: &Eigen, shift: f64, w: &CVector, tol: f64) -> ConsistentSolve {
    let n = w.len();
    let top = eig.values.iter().map(|l| l - shift).fold(1.0_f64, f64::max);
    let cut = tol * top;
    let mut solution = CVector::zeros(n);
    let mut kernel_part = CVector::zeros(n);
    let mut kernel_dim = 0;
    for (k, &lambda) in eig.values.iter().enumerate() {
        let mu = lambda - shift;
        let u = eig.vectors.column(k);
        let coeff = u.dotc(w);
        if mu <= cut {
            kernel_part += u * coeff;
            kernel_dim += 1;
        } else {
            solution += u * (coeff / mu);
        }
    }
    let kernel_residual = kernel_part.norm();
    ConsistentSolve {
        solution,
        kernel_residual,
        consistent: kernel_residual <= tol * w.norm().max(1.0),
        kernel_dim,
        kernel_part,
    }
}

/// Returns whether `M` is positive definite along with its smallest eigenvalue.
pub fn is_positive_definite(m: &SymMatrix) -> Result<(bool, f64)> {
    let lambda_min = sym_eig(m)?.lambda_min();
    Ok((lambda_min > 0.0, lambda_min))
}

/// `x* A+ x`, computed as `|U x|^2`.
pub fn plus_norm2(x: &CVector, p: &Metric) -> f64 {
    (p.lower.adjoint() * x).norm_squared()
}

pub fn real_vector(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| Cx::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, field: Field) -> SymMatrix {
        let data = CMatrix::from_fn(n, n, |_, _| {
            let im = if field == Field::Complex { rng.random_range(-1.0..1.0) } else { 0.0 };
            Cx::new(rng.random_range(-1.0..1.0), im)
        });
        SymMatrix::new(field, data).unwrap()
    }

    fn random_pd(rng: &mut ChaCha8Rng, n: usize, field: Field) -> SymMatrix {
        let g = random_hermitian(rng, n, field);
        let gg = g.matrix() * g.matrix().adjoint();
        SymMatrix::new(field, gg).unwrap().shifted(0.1)
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let eig = sym_eig(&SymMatrix::diag(Field::Real, &[1.0, -1.0])).unwrap();
        assert_eq!(eig.values, vec![-1.0, 1.0]);
        assert!((eig.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((eig.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);

        let eig = sym_eig(&SymMatrix::identity(Field::Real, 3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);

        let a2 = SymMatrix::diag(Field::Real, &[0.0, 0.0, 1.0]);
        assert_eq!(sym_eig(&a2).unwrap().values, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn non_finite_matrix_rejected() {
        let data = CMatrix::from_element(2, 2, Cx::new(f64::NAN, 0.0));
        assert!(matches!(SymMatrix::new(Field::Real, data), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn eigenpairs_and_reconstruction_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for seed in 0..100 {
            let n = 1 + seed % 10;
            let field = if seed % 2 == 0 { Field::Real } else { Field::Complex };
            let m = random_hermitian(&mut rng, n, field);
            let eig = sym_eig(&m).unwrap();
            let norm = m.frobenius_norm();
            for k in 0..n {
                let u = eig.vector(k);
                let r = m.mul_vec(&u) - &u * Cx::new(eig.values[k], 0.0);
                assert!(r.norm() <= 1e-10 * norm.max(1.0));
            }
            assert!(eig.values.windows(2).all(|p| p[0] <= p[1]));
            let err = (eig.reconstruct() - m.matrix()).norm() / norm.max(1e-300);
            assert!(err < 1e-9, "reconstruction error {err}");
        }
    }

    #[test]
    fn generalized_eigen_examples() {
        let p = Metric::identity(Field::Real, 2);
        let g = gen_eig_min(&SymMatrix::diag(Field::Real, &[1.0, -1.0]), &p, 1e-8).unwrap();
        assert_eq!(g.lambda_min, -1.0);
        assert_eq!(g.eigenspace.ncols(), 1);
        assert!((g.eigenspace[(1, 0)].norm() - 1.0).abs() < 1e-14);

        let p = Metric::new(SymMatrix::diag(Field::Real, &[2.0, 1.0])).unwrap();
        let g = gen_eig_min(&SymMatrix::diag(Field::Real, &[2.0, 0.0]), &p, 1e-8).unwrap();
        assert!(g.lambda_min.abs() < 1e-15);
        assert_eq!(g.eigenspace.ncols(), 1);
        assert!(g.eigenspace[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn generalized_eigen_matches_reduced_standard_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..100 {
            let n = 1 + seed % 6;
            let field = if seed % 3 == 0 { Field::Complex } else { Field::Real };
            let m = random_hermitian(&mut rng, n, field);
            let pd = random_pd(&mut rng, n, field);
            let metric = Metric::new(pd.clone()).unwrap();
            let g = gen_eig_min(&m, &metric, 1e-8).unwrap();

            // Independent reduction through the explicit inverse of U.
            let u_inv = metric.upper().try_inverse().unwrap();
            let reduced = SymMatrix::new(field, u_inv.adjoint() * m.matrix() * &u_inv).unwrap();
            let expect = sym_eig(&reduced).unwrap().lambda_min();
            assert!((g.lambda_min - expect).abs() < 1e-9 * (1.0 + expect.abs()));

            // M - lambda P is PSD up to roundoff.
            let shifted = SymMatrix::new(
                field,
                m.matrix() - pd.matrix() * Cx::new(g.lambda_min, 0.0),
            )
            .unwrap();
            let low = sym_eig(&shifted).unwrap().lambda_min();
            assert!(low >= -1e-10 * m.frobenius_norm().max(1.0) * pd.frobenius_norm().max(1.0));

            // Eigenspace is P-orthonormal and solves the pencil.
            let x = g.eigenspace.column(0).into_owned();
            assert!((plus_norm2(&x, &metric) - 1.0).abs() < 1e-9);
            let r = m.mul_vec(&x) - pd.mul_vec(&x) * Cx::new(g.lambda_min, 0.0);
            assert!(r.norm() < 1e-8 * (1.0 + m.frobenius_norm()) * (1.0 + x.norm()));
        }
    }

    #[test]
    fn min_norm_solve_examples() {
        let s = min_norm_solve(&SymMatrix::diag(Field::Real, &[0.0, 2.0]), &real_vector(&[0.0, -1.0]), 1e-8)
            .unwrap();
        assert!(s.consistent);
        assert_eq!(s.kernel_residual, 0.0);
        assert!((s.solution - real_vector(&[0.0, -0.5])).norm() < 1e-15);

        let s = min_norm_solve(&SymMatrix::diag(Field::Real, &[2.0, 0.0]), &real_vector(&[0.0, 1.0]), 1e-8)
            .unwrap();
        assert!(!s.consistent);
        assert!((s.kernel_residual - 1.0).abs() < 1e-15);

        let w = real_vector(&[0.3, -1.7, 2.5]);
        let s = min_norm_solve(&SymMatrix::identity(Field::Real, 3), &w, 1e-8).unwrap();
        assert!((s.solution - &w).norm() < 1e-14);
        assert_eq!(s.kernel_residual, 0.0);
    }

    #[test]
    fn min_norm_solve_rejects_indefinite() {
        let r = min_norm_solve(&SymMatrix::diag(Field::Real, &[1.0, -1.0]), &real_vector(&[1.0, 1.0]), 1e-8);
        assert!(matches!(r, Err(Error::NotPsd { .. })));
    }

    #[test]
    fn min_norm_solve_reconstructs_rhs_on_psd_fixtures() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..50 {
            let n = 2 + seed % 5;
            let field = if seed % 2 == 0 { Field::Real } else { Field::Complex };
            let g = random_hermitian(&mut rng, n, field);
            // Rank-deficient PSD matrix: G G* restricted to a random subspace.
            let rank = 1 + seed % (n - 1);
            let cols = g.matrix().columns(0, rank).into_owned();
            let b = SymMatrix::new(field, &cols * cols.adjoint()).unwrap();
            let w = CVector::from_fn(n, |_, _| {
                let im = if field == Field::Complex { rng.random_range(-1.0..1.0) } else { 0.0 };
                Cx::new(rng.random_range(-1.0..1.0), im)
            });
            let s = min_norm_solve(&b, &w, 1e-8).unwrap();
            assert_eq!(s.kernel_dim, n - rank);
            let rebuilt = b.mul_vec(&s.solution) + &s.kernel_part;
            assert!((rebuilt - &w).norm() < 1e-8 * (1.0 + w.norm()));
            // The minimum-norm solution has no kernel component.
            assert!(s.solution.dotc(&s.kernel_part).norm() < 1e-8 * (1.0 + w.norm()));
        }
    }

    #[test]
    fn definiteness_examples() {
        assert_eq!(is_positive_definite(&SymMatrix::identity(Field::Real, 3)).unwrap(), (true, 1.0));
        assert_eq!(
            is_positive_definite(&SymMatrix::diag(Field::Real, &[1.0, -1.0])).unwrap(),
            (false, -1.0)
        );
    }

    #[test]
    fn plus_norm_matches_quadratic_form() {
        let p = Metric::identity(Field::Real, 2);
        assert_eq!(plus_norm2(&real_vector(&[0.0, 0.0]), &p), 0.0);
        assert_eq!(plus_norm2(&real_vector(&[0.0, -0.5]), &p), 0.25);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..50 {
            let n = 1 + seed % 6;
            let field = if seed % 2 == 0 { Field::Real } else { Field::Complex };
            let pd = random_pd(&mut rng, n, field);
            let metric = Metric::new(pd.clone()).unwrap();
            let rebuilt = metric.lower() * metric.upper();
            assert!((rebuilt - pd.matrix()).norm() <= 1e-12 * pd.frobenius_norm());
            let x = CVector::from_fn(n, |_, _| Cx::new(rng.random_range(-1.0..1.0), 0.0));
            let direct = pd.quad_form(&x);
            let val = plus_norm2(&x, &metric);
            assert!((val - direct).abs() <= 1e-12 * direct.abs().max(1e-300) * 10.0);
            assert!(val > 0.0);
        }
    }

    #[test]
    fn non_pd_metric_rejected() {
        let r = Metric::new(SymMatrix::diag(Field::Real, &[1.0, 0.0]));
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));
    }
}
