//! Convexity certificates for images of quadratic maps `R^n/C^n -> R^m`.

pub mod convexity;
pub mod definiteness;
pub mod error;
pub mod estimates;
pub mod fixtures;
pub mod generators;
pub mod io;
pub mod jnr;
pub mod numkernel;
pub mod oracle;
pub mod quadmap;
pub mod seeds;
pub mod sphere;

pub use error::{Error, Result};
pub use numkernel::{CMatrix, CVector, Cx, Field, Metric, SymMatrix};
pub use quadmap::{support_frame, QuadraticMap, SupportFrame};
