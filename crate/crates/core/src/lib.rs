//! Finite-dimensional laboratory for noncommutative martingale Hardy spaces.
//!
//! Operators live in `M_d` with the normalized trace. Filtrations come in
//! three concrete families (tensor dyadic, block pinching, commutative
//! partitions), and every construction is checked against explicit
//! inequalities by the [`harness`].

// Parameter guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod atoms;
pub mod decompositions;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod io;
pub mod random;
pub mod transforms;
pub mod tolerance;

pub use error::{NclabError, Result};
