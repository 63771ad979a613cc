//! Exact rank and parity calculus for finite torsion modules over split rings.
//!
//! The crate provides, bottom up:
//!
//! * [`linalg`] — Hermite normal forms over `Z`, Howell forms over `Z/p^e`,
//!   and the kernel/solve/intersection machinery built on them.
//! * [`ring`] — monogenic number rings with an involution, factorization of
//!   an odd unramified prime, Hensel idempotents, and cyclotomic rings
//!   `Z[zeta_{p^n}]` with the element `pi = zeta - zeta^{-1}`.
//! * [`torsion`] — finite modules over products of local rings, presented by
//!   cyclic orders plus action matrices, with the rank-vector calculus.
//! * [`pairing`] — exact bilinear pairings on those modules: axiom checking,
//!   c-twisting, orthogonal complements, hyperbolic decomposition, and the
//!   Hermitian form on twist lattices.
//! * [`twist`] — cyclic quotients of an abelian group, rational idempotents,
//!   twist ideals `I_L` with their cyclotomic multiplier rings, and the
//!   composition law for coprime twists.
//! * [`sandbox`] — seeded synthetic Selmer configurations: local places with
//!   self-dual conditions, a maximal isotropic global image, Selmer groups as
//!   localization kernels, and brute-force parity verification.
//! * [`parity`] — the tower engine: local-constant resolution rules, per-twist
//!   parity statements, the composite Sylow recursion, and rank lower bounds.
//!
//! Everything is exact: integers are arbitrary precision, residues live in
//! `Z/p^e` for an odd prime `p`, and no floating point appears anywhere. All
//! values are immutable after construction and safe to share across threads.

pub mod linalg;
pub mod pairing;
pub mod parity;
pub mod poly;
pub mod ring;
pub mod rng;
pub mod sandbox;
pub mod torsion;
pub mod twist;

#[cfg(doctest)]
mod book;
