//! Constructive algebra on quadrics over prime fields: quadratic form normalization,
//! zero counts and character sums, long division and Nullstellensatz certificates,
//! M-sets with Fubini averaging, and equidistribution tests for polynomial sequences.

pub mod error;
pub mod ffcore;
pub mod fpoly;
pub mod quadform;
pub mod counting;
pub mod division;
pub mod msets;
pub mod equidist;

pub use error::{Error, Result};
pub use ffcore::{FpMatrix, PrimeField};
pub use fpoly::{FpMultiPoly, RatMultiPoly, TauIota};
pub use quadform::{AffineSubspace, QuadForm};
