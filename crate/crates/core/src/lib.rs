//! Numerical toolkit for free (noncommutative) polynomials, transfer-function
//! realizations on operator balls, and the functional calculus they induce
//! on tuples of matrices.

pub mod error;
pub mod experiments;
pub mod freepoly;
pub mod funcalc;
pub mod io;
pub mod matrix;
pub mod realization;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use freepoly::{FreePoly, PolyMatrix, Word};
pub use matrix::{ComplexMatrix, MatrixTuple, C64};
pub use realization::{Colligation, Combine};
