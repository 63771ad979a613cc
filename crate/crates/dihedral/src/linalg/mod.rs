//! Exact matrix normal forms and subgroup arithmetic over `Z` and `Z/p^e`.
//!
//! Two worlds live here. [`IntMatrix`] is arbitrary-precision integer
//! linear algebra: row Hermite normal form with unimodular transform, left
//! kernels, exact solving, and (internally) Smith invariants. [`ResidueMatrix`]
//! is linear algebra over `Z/p^e` for an odd prime power: the Howell form is
//! the canonical representation of a row span, supporting membership,
//! kernels, solving, intersections and sums without any basis-change
//! bookkeeping.
//!
//! Vectors are rows throughout the crate, and maps act on the right: the
//! image of `x` under the matrix `m` is `x * m`.

mod int;
mod residue;

pub use int::IntMatrix;
pub use residue::{span_intersection, span_sum, ResidueMatrix, Zpe};
