//! Non-Archimedean and Hermitian norm geometry, and maximal Chow and K
//! destabilizers of polarized toric manifolds.

pub mod chowweight;
pub mod error;
pub mod hermspace;
pub mod kdestab;
pub mod linalg;
pub mod naspace;
pub mod polytope;
pub mod quantize;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
