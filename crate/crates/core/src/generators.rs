//! Seeded random problem generators for property tests and demos.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numkernel::{gen_eig_min, CMatrix, CVector, Cx, Field, SymMatrix};
use crate::quadmap::{support_frame, QuadraticMap};
use crate::sphere::{dot, normalize, orthonormal_complement, random_unit};

fn field_of(complex: bool) -> Field {
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

fn entry<R: Rng>(rng: &mut R, field: Field) -> Cx {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = if field == Field::Complex { rng.sample(StandardNormal) } else { 0.0 };
    Cx::new(re, im)
}

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, field: Field) -> SymMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| entry(rng, field));
    SymMatrix::new(field, g.scale(0.5)).expect("finite")
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, field: Field) -> CVector {
    CVector::from_fn(n, |_, _| entry(rng, field))
}

/// A point with standard-normal coordinates scaled by `scale`.
pub fn random_point<R: Rng>(rng: &mut R, n: usize, field: Field, scale: f64) -> CVector {
    random_vector(rng, n, field) * Cx::new(scale, 0.0)
}

/// Haar-ish random unitary (orthogonal for the real field) from a QR step.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize, field: Field) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| entry(rng, field));
    g.qr().q()
}

/// A random definite matrix tuple together with a unit `c+` for which
/// `c+ . A` has smallest eigenvalue at least 1/2.
pub fn random_definite_tuple<R: Rng>(rng: &mut R, m: usize, n: usize, field: Field) -> (Vec<SymMatrix>, Vec<f64>) {
    let mut a: Vec<SymMatrix> = (0..m).map(|_| random_hermitian(rng, n, field)).collect();
    let c_plus = random_unit(rng, m);
    let low = crate::numkernel::sym_eig(&SymMatrix::combine(&c_plus, &a)).expect("finite").lambda_min();
    let shift = 0.5 - low.min(0.0) + rng.random_range(0.0..0.5);
    for (ai, ci) in a.iter_mut().zip(&c_plus) {
        *ai = ai.shifted(shift * ci);
    }
    (a, c_plus)
}

/// A random inhomogeneous map with a valid unit `c+`.
pub fn random_map<R: Rng>(rng: &mut R, m: usize, n: usize, complex: bool) -> (QuadraticMap, Vec<f64>) {
    let field = field_of(complex);
    let (a, c_plus) = random_definite_tuple(rng, m, n, field);
    let v = (0..m).map(|_| random_vector(rng, n, field)).collect();
    let f0 = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    (QuadraticMap::new(field, a, v, f0).expect("valid"), c_plus)
}

/// A random map with a planted flat edge: the pencil along `planted` (a unit
/// vector orthogonal to `c+`) is made consistent, so the convexity radius for
/// `c+` is finite.
pub struct PlantedMap {
    pub map: QuadraticMap,
    pub c_plus: Vec<f64>,
    pub planted: Vec<f64>,
}

pub fn planted_flat_edge_map<R: Rng>(rng: &mut R, m: usize, n: usize, complex: bool) -> PlantedMap {
    assert!(m >= 2, "a planted direction needs m >= 2");
    let field = field_of(complex);
    let (a, c_plus) = random_definite_tuple(rng, m, n, field);
    let x0 = random_vector(rng, n, field);

    // Centered vectors d_i = v_i - A_i x0 must satisfy c+ . d = 0.
    let mut d: Vec<CVector> = (0..m).map(|_| random_vector(rng, n, field)).collect();
    let cp2 = dot(&c_plus, &c_plus);
    let mut along = CVector::zeros(n);
    for (ci, di) in c_plus.iter().zip(&d) {
        along += di * Cx::new(*ci, 0.0);
    }
    for (ci, di) in c_plus.iter().zip(d.iter_mut()) {
        *di -= &along * Cx::new(ci / cp2, 0.0);
    }

    let basis = orthonormal_complement(&c_plus);
    let coords = random_unit(rng, basis.len());
    let planted = normalize(&crate::sphere::combine(&coords, &basis));

    let frame = support_frame(&QuadraticMap::homogeneous(field, a.clone()).expect("valid"), &c_plus)
        .expect("definite by construction");
    let pencil = gen_eig_min(&SymMatrix::combine(&planted, &a), &frame.metric, 1e-8).expect("finite");
    // Euclidean projector onto ker(B), B = planted . A - lambda A+.
    let k = pencil.eigenspace.clone();
    let gram = k.adjoint() * &k;
    let proj = &k * gram.try_inverse().expect("independent kernel basis") * k.adjoint();
    let mut w = CVector::zeros(n);
    for (ci, di) in planted.iter().zip(&d) {
        w += di * Cx::new(*ci, 0.0);
    }
    let kernel_part = proj * w;
    for (ci, di) in planted.iter().zip(d.iter_mut()) {
        *di -= &kernel_part * Cx::new(*ci, 0.0);
    }

    let v: Vec<CVector> = a.iter().zip(&d).map(|(ai, di)| di + ai.mul_vec(&x0)).collect();
    let f0 = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let map = QuadraticMap::new(field, a, v, f0).expect("valid");
    PlantedMap { map, c_plus, planted }
}
