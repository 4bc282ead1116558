//! Exact arithmetic in totally real number fields.

mod field;
pub mod linalg;
mod lattice;
pub mod order;
pub mod poly;
mod primes;
mod units;

pub use field::{EmbeddingInterval, FieldElement, RatInterval, TotallyRealField};
pub use lattice::QLattice;
pub use primes::{find_principal_degree_one_primes, reduce_at_root, DegreeOnePrime};
pub use units::{quadratic_units, UnitData};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("polynomial must have degree at least one")]
    DegreeZero,
    #[error("polynomial must be monic")]
    NotMonic,
    #[error("polynomial is not irreducible over the rationals")]
    NotIrreducible,
    #[error("only {real_roots} of {degree} roots are real")]
    NotTotallyReal { real_roots: usize, degree: usize },
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("elements are linearly dependent")]
    LinearlyDependent,
    #[error("generators do not span a full-rank lattice")]
    NotFullRank,
    #[error("second lattice is not contained in the first")]
    NotSublattice,
    #[error("lattice is not an O_K-module")]
    NotAnIdeal,
    #[error("unit computation is implemented for degree 2 only (got degree {0}); supply units explicitly")]
    UnitsNeedDegreeTwo(usize),
    #[error("invalid unit data: {0}")]
    BadUnits(String),
    #[error("search bound reached before enough results were found")]
    SearchExhausted,
    #[error("cannot parse rational '{0}'")]
    Parse(String),
}

/// Build a field from integer coefficients in increasing degree order.
pub fn make_field(min_poly: &[i64]) -> Result<TotallyRealField, FieldError> {
    TotallyRealField::from_i64(min_poly)
}
