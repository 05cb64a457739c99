//! Quadratic maps `f_i(x) = x* A_i x - v_i* x - x* v_i + f0_i`, their
//! supporting frames, and the homogeneous lift to `m + 1` forms.

use crate::error::{Error, Result};
use crate::numkernel::{CMatrix, CVector, Cx, Field, Metric, SymMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticMap {
    field: Field,
    n: usize,
    a: Vec<SymMatrix>,
    v: Vec<CVector>,
    f0: Vec<f64>,
}

impl QuadraticMap {
    pub fn new(field: Field, a: Vec<SymMatrix>, v: Vec<CVector>, f0: Vec<f64>) -> Result<Self> {
        let m = a.len();
        if m == 0 {
            return Err(Error::InvalidInput("a quadratic map needs at least one component".into()));
        }
        let n = a[0].n();
        if v.len() != m {
            return Err(Error::InvalidInput(format!("expected {m} vectors v, got {}", v.len())));
        }
        if f0.len() != m {
            return Err(Error::InvalidInput(format!("expected {m} offsets f0, got {}", f0.len())));
        }
        let mut mats = Vec::with_capacity(m);
        for (i, ai) in a.into_iter().enumerate() {
            if ai.n() != n {
                return Err(Error::InvalidInput(format!("A[{i}] is {}x{}, expected {n}x{n}", ai.n(), ai.n())));
            }
            if field == Field::Real && !ai.is_real_valued() {
                return Err(Error::InvalidInput(format!("A[{i}] has imaginary entries in a real map")));
            }
            mats.push(ai.with_field(field)?);
        }
        for (i, vi) in v.iter().enumerate() {
            if vi.len() != n {
                return Err(Error::InvalidInput(format!("v[{i}] has length {}, expected {n}", vi.len())));
            }
            if field == Field::Real && vi.iter().any(|z| z.im != 0.0) {
                return Err(Error::InvalidInput(format!("v[{i}] has imaginary entries in a real map")));
            }
            if vi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("v[{i}] has non-finite entries")));
            }
        }
        if f0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("f0 has non-finite entries".into()));
        }
        Ok(Self { field, n, a: mats, v, f0 })
    }

    /// The map `x -> (x* A_i x)_i`.
    pub fn homogeneous(field: Field, a: Vec<SymMatrix>) -> Result<Self> {
        let m = a.len();
        let n = a.first().map_or(0, SymMatrix::n);
        Self::new(field, a, vec![CVector::zeros(n); m], vec![0.0; m])
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[SymMatrix] {
        &self.a
    }

    pub fn v(&self) -> &[CVector] {
        &self.v
    }

    pub fn f0(&self) -> &[f64] {
        &self.f0
    }

    pub fn combined_matrix(&self, c: &[f64]) -> SymMatrix {
        SymMatrix::combine(c, &self.a)
    }

    pub fn combined_vector(&self, c: &[f64]) -> CVector {
        let mut out = CVector::zeros(self.n);
        for (ci, vi) in c.iter().zip(&self.v) {
            out += vi * Cx::new(*ci, 0.0);
        }
        out
    }

    /// `v_i - A_i x0` for every component.
    pub fn centered_vectors(&self, x0: &CVector) -> Vec<CVector> {
        self.a.iter().zip(&self.v).map(|(ai, vi)| vi - ai.mul_vec(x0)).collect()
    }

    pub fn evaluate(&self, x: &CVector) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::InvalidInput(format!("point has length {}, expected {}", x.len(), self.n)));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &CVector) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.v)
            .zip(&self.f0)
            .map(|((ai, vi), f0)| ai.quad_form(x) - 2.0 * vi.dotc(x).re + f0)
            .collect()
    }

    /// The same map with `f0 = 0`.
    pub fn without_offset(&self) -> Self {
        Self { f0: vec![0.0; self.m()], ..self.clone() }
    }

    /// Substitutes `x -> Q x`: `A -> Q* A Q`, `v -> Q* v`.
    pub fn change_basis(&self, q: &CMatrix) -> Result<Self> {
        if q.nrows() != self.n || q.ncols() != self.n {
            return Err(Error::InvalidInput("basis change has wrong size".into()));
        }
        let field = if q.iter().all(|z| z.im == 0.0) { self.field } else { Field::Complex };
        let a = self.a.iter().map(|ai| ai.congruence(q)).collect::<Result<Vec<_>>>()?;
        let v = self.v.iter().map(|vi| q.adjoint() * vi).collect();
        Self::new(field, a, v, self.f0.clone())
    }

    /// Promotes a real map to the complex field.
    pub fn complexified(&self) -> Self {
        let a = self.a.iter().map(|ai| ai.with_field(Field::Complex).expect("finite")).collect();
        Self { field: Field::Complex, a, ..self.clone() }
    }
}

/// The frame attached to a positive-definite combination `A+ = c+ . A`.
///
/// The hyperplane orthogonal to `c+` touches the image only at `f(x0)`, and
/// every ellipsoid `|x - x0|_+^2 = z` is mapped into the parallel hyperplane
/// at height `z0 + z` (measured without `f0`).
#[derive(Clone, Debug)]
pub struct SupportFrame {
    pub c_plus: Vec<f64>,
    pub metric: Metric,
    pub v_plus: CVector,
    pub x0: CVector,
    pub z0: f64,
}

pub fn support_frame(map: &QuadraticMap, c_plus: &[f64]) -> Result<SupportFrame> {
    if c_plus.len() != map.m() {
        return Err(Error::InvalidInput(format!(
            "c_plus has length {}, expected {}",
            c_plus.len(),
            map.m()
        )));
    }
    let plus = map.combined_matrix(c_plus);
    let metric = Metric::new(plus).map_err(|e| match e {
        Error::NotPositiveDefinite { lambda_min } => Error::NotDefiniteDirection { lambda_min },
        other => other,
    })?;
    let v_plus = map.combined_vector(c_plus);
    let x0 = metric.solve(&v_plus);
    let z0 = -v_plus.dotc(&x0).re;
    Ok(SupportFrame { c_plus: c_plus.to_vec(), metric, v_plus, x0, z0 })
}

impl SupportFrame {
    /// Height of `y` above the supporting hyperplane, `c+ . (y - f0) - z0`.
    pub fn height(&self, map: &QuadraticMap, y: &[f64]) -> f64 {
        let dy: f64 = self.c_plus.iter().zip(y).zip(map.f0()).map(|((c, y), f)| c * (y - f)).sum();
        dy - self.z0
    }

    pub fn supporting_hyperplane(&self, map: &QuadraticMap) -> Hyperplane {
        let offset = self.c_plus.iter().zip(map.f0()).map(|(c, f)| c * f).sum::<f64>() + self.z0;
        Hyperplane { normal: self.c_plus.clone(), offset }
    }
}

/// `{y : normal . y = offset}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().all(|x| *x == 0.0) || normal.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("hyperplane normal must be finite and nonzero".into()));
        }
        Ok(Self { normal, offset })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed value `normal . y - offset`.
    pub fn signed_value(&self, y: &[f64]) -> f64 {
        self.normal.iter().zip(y).map(|(c, y)| c * y).sum::<f64>() - self.offset
    }
}

/// The homogeneous lift: `m + 1` hermitian forms in `n + 1` variables whose
/// image sliced at last coordinate 1 is the image of the offset-free map.
#[derive(Clone, Debug)]
pub struct HomogenizedMap {
    pub big_a: Vec<SymMatrix>,
    /// The `f0` that was shifted away before lifting.
    pub f0_shift: Vec<f64>,
    pub field: Field,
}

pub fn homogenize(map: &QuadraticMap) -> HomogenizedMap {
    let n = map.n();
    let mut big_a = Vec::with_capacity(map.m() + 1);
    for (ai, vi) in map.a().iter().zip(map.v()) {
        let mut big = CMatrix::zeros(n + 1, n + 1);
        big.view_mut((0, 0), (n, n)).copy_from(ai.matrix());
        for r in 0..n {
            big[(r, n)] = -vi[r];
            big[(n, r)] = -vi[r].conj();
        }
        big_a.push(SymMatrix::new(map.field(), big).expect("finite lift"));
    }
    let mut corner = vec![0.0; n + 1];
    corner[n] = 1.0;
    big_a.push(SymMatrix::diag(map.field(), &corner));
    HomogenizedMap { big_a, f0_shift: map.f0().to_vec(), field: map.field() }
}

impl HomogenizedMap {
    pub fn evaluate(&self, x: &CVector) -> Vec<f64> {
        self.big_a.iter().map(|a| a.quad_form(x)).collect()
    }

    pub fn m_plus_one(&self) -> usize {
        self.big_a.len()
    }
}

/// Extends `c+` by a last coefficient just above `v+* A+^{-1} v+`, which makes
/// the lifted combination positive definite.
pub fn extend_cplus(frame: &SupportFrame, margin: f64) -> Result<Vec<f64>> {
    if !margin.is_finite() || margin <= 0.0 {
        return Err(Error::InvalidInput(format!("margin must be positive, got {margin}")));
    }
    let threshold = frame.v_plus.dotc(&frame.x0).re;
    let mut out = frame.c_plus.clone();
    out.push(threshold + margin);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::numkernel::{is_positive_definite, plus_norm2, real_vector, sym_eig};
    use crate::generators::{random_map, random_point};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn evaluate_flat_edge_pair() {
        let map = fixtures::flat_edge_pair();
        assert_eq!(map.evaluate(&real_vector(&[0.0, 0.0])).unwrap(), vec![0.0, 0.0]);
        assert_eq!(map.evaluate(&real_vector(&[0.0, -0.5])).unwrap(), vec![0.25, 0.75]);
        assert!(map.evaluate(&real_vector(&[1.0])).is_err());
    }

    #[test]
    fn homogeneous_map_is_quadratic_form() {
        let map = fixtures::homogeneous_pair();
        let x = real_vector(&[0.7, -1.3]);
        let y = map.evaluate(&x).unwrap();
        assert!((y[0] - 2.18).abs() < 1e-14 && (y[1] + 1.2).abs() < 1e-14);
    }

    #[test]
    fn support_frame_examples() {
        let map = fixtures::flat_edge_pair();
        let frame = support_frame(&map, &[1.0, 0.0]).unwrap();
        assert_eq!(frame.x0.norm(), 0.0);
        assert_eq!(frame.z0, 0.0);

        let shifted = QuadraticMap::new(
            Field::Real,
            map.a().to_vec(),
            vec![real_vector(&[1.0, 0.0]), real_vector(&[0.0, 1.0])],
            vec![0.0, 0.0],
        )
        .unwrap();
        let frame = support_frame(&shifted, &[1.0, 0.0]).unwrap();
        assert!((frame.x0.clone() - real_vector(&[1.0, 0.0])).norm() < 1e-15);
        assert_eq!(frame.z0, -1.0);

        let err = support_frame(&map, &[0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotDefiniteDirection { .. }));
    }

    #[test]
    fn supporting_value_at_x0_is_z0() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..40 {
            let (map, c_plus) = random_map(&mut rng, 2 + seed % 2, 2 + seed % 4, seed % 2 == 1);
            let frame = support_frame(&map, &c_plus).unwrap();
            let y = map.evaluate(&frame.x0).unwrap();
            assert!(frame.height(&map, &y).abs() < 1e-10 * (1.0 + frame.z0.abs()));
            let r = frame.metric.plus_matrix().mul_vec(&frame.x0) - &frame.v_plus;
            assert!(r.norm() < 1e-10 * (1.0 + frame.v_plus.norm()));
        }
    }

    #[test]
    fn ellipsoids_map_to_parallel_hyperplanes() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..200 {
            let (map, c_plus) = random_map(&mut rng, 1 + seed % 4, 1 + seed % 5, seed % 3 == 0);
            let frame = support_frame(&map, &c_plus).unwrap();
            for _ in 0..5 {
                let x = random_point(&mut rng, map.n(), map.field(), 3.0);
                let y = map.evaluate(&x).unwrap();
                let lhs = frame.height(&map, &y);
                let rhs = plus_norm2(&(&x - &frame.x0), &frame.metric);
                assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs() + frame.z0.abs()));
            }
        }
    }

    #[test]
    fn homogenize_flat_edge_pair() {
        let hom = homogenize(&fixtures::flat_edge_pair());
        let expect = [
            SymMatrix::real(3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            SymMatrix::real(3, &[1.0, 0.0, 0.0, 0.0, -1.0, -1.0, 0.0, -1.0, 0.0]).unwrap(),
            SymMatrix::diag(Field::Real, &[0.0, 0.0, 1.0]),
        ];
        assert_eq!(hom.big_a.len(), 3);
        for (a, b) in hom.big_a.iter().zip(&expect) {
            assert_eq!(a.matrix(), b.matrix());
        }
    }

    #[test]
    fn homogenized_slice_reproduces_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let (map, _) = random_map(&mut rng, 2 + seed % 3, 2 + seed % 3, seed % 2 == 0);
            let hom = homogenize(&map);
            let m = map.m();
            let n = map.n();
            let mut e = CVector::zeros(n + 1);
            e[n] = Cx::new(1.0, 0.0);
            let y0 = hom.evaluate(&e);
            assert!(y0[..m].iter().all(|y| *y == 0.0) && y0[m] == 1.0);
            for _ in 0..100 {
                let x = random_point(&mut rng, n, map.field(), 2.0);
                let mut big = CVector::zeros(n + 1);
                big.rows_mut(0, n).copy_from(&x);
                big[n] = Cx::new(1.0, 0.0);
                let lifted = hom.evaluate(&big);
                let direct = map.evaluate(&x).unwrap();
                for i in 0..m {
                    let expect = direct[i] - map.f0()[i];
                    assert!((lifted[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
                }
                assert_eq!(lifted[m], 1.0);
            }
        }
    }

    #[test]
    fn extended_cplus_is_positive_definite_and_monotone() {
        let map = fixtures::flat_edge_pair();
        let frame = support_frame(&map, &[1.0, 0.0]).unwrap();
        let hom = homogenize(&map);
        let c = extend_cplus(&frame, 1.0).unwrap();
        assert_eq!(c, vec![1.0, 0.0, 1.0]);
        let plus = SymMatrix::combine(&c, &hom.big_a);
        assert_eq!(plus.matrix(), SymMatrix::identity(Field::Real, 3).matrix());

        let c = extend_cplus(&frame, 1e-6).unwrap();
        let (pd, low) = is_positive_definite(&SymMatrix::combine(&c, &hom.big_a)).unwrap();
        assert!(pd && low > 0.0 && low <= 1e-6);

        assert!(extend_cplus(&frame, 0.0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (map, c_plus) = random_map(&mut rng, 3, 3, false);
        let frame = support_frame(&map, &c_plus).unwrap();
        let hom = homogenize(&map);
        let threshold = frame.v_plus.dotc(&frame.x0).re;
        let mut last = f64::NEG_INFINITY;
        for margin in [1e-3, 1e-1, 1.0] {
            let c = extend_cplus(&frame, margin).unwrap();
            assert!(c[3] > threshold);
            let low = sym_eig(&SymMatrix::combine(&c, &hom.big_a)).unwrap().lambda_min();
            assert!(low > 0.0 && low > last);
            last = low;
        }
    }
}
