//! Small closed-form problems used throughout the tests, the CLI examples and
//! the browser demo.

use crate::jnr::JnrTuple;
use crate::numkernel::{real_vector, Field, SymMatrix};
use crate::quadmap::QuadraticMap;

/// `f(x) = (|x|^2, x1^2 - x2^2 - 2 x2)` on `R^2`. Its image has a single flat
/// edge, starting at height 1/4 above the supporting line `y1 = 0`.
pub fn flat_edge_pair() -> QuadraticMap {
    QuadraticMap::new(
        Field::Real,
        vec![SymMatrix::identity(Field::Real, 2), SymMatrix::diag(Field::Real, &[1.0, -1.0])],
        vec![real_vector(&[0.0, 0.0]), real_vector(&[0.0, 1.0])],
        vec![0.0, 0.0],
    )
    .expect("valid fixture")
}

/// [`flat_edge_pair`] with the linear terms removed.
pub fn homogeneous_pair() -> QuadraticMap {
    QuadraticMap::homogeneous(
        Field::Real,
        vec![SymMatrix::identity(Field::Real, 2), SymMatrix::diag(Field::Real, &[1.0, -1.0])],
    )
    .expect("valid fixture")
}

/// `f(x) = |x|^2` on `R^n`.
pub fn identity_map(n: usize) -> QuadraticMap {
    QuadraticMap::homogeneous(Field::Real, vec![SymMatrix::identity(Field::Real, n)]).expect("valid fixture")
}

/// `f(x) = (x, x^2)` on `R`: a parabola, whose image is not convex.
pub fn parabola() -> QuadraticMap {
    QuadraticMap::new(
        Field::Real,
        vec![SymMatrix::zeros(Field::Real, 1), SymMatrix::identity(Field::Real, 1)],
        vec![real_vector(&[-0.5]), real_vector(&[0.0])],
        vec![0.0, 0.0],
    )
    .expect("valid fixture")
}

/// `f(x) = x1^2 - x2^2 - 2 x2` alone.
pub fn single_saddle() -> QuadraticMap {
    QuadraticMap::new(
        Field::Real,
        vec![SymMatrix::diag(Field::Real, &[1.0, -1.0])],
        vec![real_vector(&[0.0, 1.0])],
        vec![0.0],
    )
    .expect("valid fixture")
}

/// A pair of 3x3 matrices whose joint numerical range has one flat edge,
/// orthogonal to the second coordinate axis.
pub fn flat_edge_tuple() -> JnrTuple {
    let a1 = SymMatrix::real(3, &[2.0, 0.0, -1.5, 0.0, -2.0, 1.5, -1.5, 1.5, 0.0]).expect("symmetric");
    let a2 = SymMatrix::diag(Field::Real, &[0.0, 0.0, 1.0]);
    JnrTuple::new(Field::Real, vec![a1, a2]).expect("valid fixture")
}
