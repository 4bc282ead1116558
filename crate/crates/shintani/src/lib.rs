//! Shintani L-functions of totally real fields.
//!
//! Fans of cones in `K`, Schwartz–Bruhat functions on the finite adeles given by
//! lattice-coset tables, and high-precision evaluation of the normalized
//! Shintani L-function together with its functional equation.

pub mod numberfield;
pub mod fan_algebra;
pub mod conical;
pub mod mp;
pub mod adelic;
pub mod shintani_eval;
pub mod hecke;
pub mod presets;
