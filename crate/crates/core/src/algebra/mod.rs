//! Exact arithmetic for matrices whose entries are trigonometric polynomials
//! in one variable with rational coefficients.
//!
//! Everything here is closed-form: products expand through the
//! product-to-sum identities, derivatives and averages are exact, and the
//! zero-mean antiderivative inverts the derivative on fluctuating parts.
//! No floating point enters except through [`TrigPoly::eval`], which exists
//! so the numeric half of the crate can be checked against this one.

mod matrix;
mod poly;
mod rational;

pub use matrix::TrigMat;
pub use poly::{Harmonic, TrigPoly};
pub use rational::Rational;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {left_rows}x{left_cols} against {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("entry count {given} does not fill a {rows}x{cols} matrix")]
    BadEntryCount {
        rows: usize,
        cols: usize,
        given: usize,
    },
    #[error("zero-mean antiderivative undefined: constant part is {mean}, not zero")]
    NonzeroMean { mean: String },
}
