//! Number-ring arithmetic for a monogenic order `O = Z[x]/(f)` carrying an
//! involution, and the residue rings it induces.
//!
//! For an odd prime `p` unramified in `O`, the quotient `O/p^e O` splits as a
//! product of Galois local rings, one per irreducible factor of `f mod p`.
//! [`SplitRing`] packages that decomposition: the lifted factors, the Hensel
//! idempotents, and the permutation the involution induces on the factors.
//! [`CyclotomicRing`] covers `Z[zeta_{p^n}]` with the involution
//! `zeta -> zeta^{-1}` and the element `pi = zeta - zeta^{-1}` generating the
//! unique prime above `p`.

use crate::linalg::{IntMatrix, Zpe};
use crate::poly::{hensel_lift_factors, IntPoly, ModPoly, PolyError};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;

pub const CYCLOTOMIC_CAP: u64 = 27;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingError {
    NotMonic,
    ZeroDegree,
    NotIrreducible,
    DaggerNotRoot,
    DaggerNotInvolution,
    EvenPrime,
    NotPrime(u64),
    Ramified { p: u64 },
    DaggerNotPermuting,
    CapExceeded(String),
}

impl fmt::Display for RingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingError::NotMonic => write!(f, "defining polynomial must be monic"),
            RingError::ZeroDegree => write!(f, "defining polynomial must have degree >= 1"),
            RingError::NotIrreducible => write!(f, "defining polynomial is reducible over Q"),
            RingError::DaggerNotRoot => {
                write!(f, "involution image is not a root of the defining polynomial")
            }
            RingError::DaggerNotInvolution => write!(f, "involution squared is not the identity"),
            RingError::EvenPrime => write!(f, "the prime must be odd"),
            RingError::NotPrime(p) => write!(f, "{p} is not prime"),
            RingError::Ramified { p } => {
                write!(f, "{p} divides the discriminant (ramified case is out of scope)")
            }
            RingError::DaggerNotPermuting => {
                write!(f, "involution does not permute the primes above p")
            }
            RingError::CapExceeded(what) => write!(f, "desk-scale cap exceeded: {what}"),
        }
    }
}

impl std::error::Error for RingError {}

impl From<PolyError> for RingError {
    fn from(e: PolyError) -> Self {
        RingError::CapExceeded(e.to_string())
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ---------------------------------------------------------------------------
// NumberRing
// ---------------------------------------------------------------------------

/// Monogenic order `O = Z[x]/(f)` with an involution sending the generator
/// `x` to `dagger_image(x)`. `f` must be monic and irreducible over `Q`; the
/// involution must be a ring automorphism of order dividing 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberRing {
    f: IntPoly,
    dagger_image: IntPoly,
}

impl NumberRing {
    pub fn new(f: IntPoly, dagger_image: IntPoly) -> Result<Self, RingError> {
        if !f.is_monic() {
            return Err(RingError::NotMonic);
        }
        if f.degree() == Some(0) {
            return Err(RingError::ZeroDegree);
        }
        if !f.is_irreducible_monic()? {
            return Err(RingError::NotIrreducible);
        }
        let d = dagger_image.rem_monic(&f);
        // f(dagger(x)) = 0 in O, so x -> dagger(x) extends to a ring map.
        if !f.compose_mod(&d, &f).is_zero() {
            return Err(RingError::DaggerNotRoot);
        }
        // And it squares to the identity.
        if d.compose_mod(&d, &f) != IntPoly::x().rem_monic(&f) {
            return Err(RingError::DaggerNotInvolution);
        }
        Ok(NumberRing { f, dagger_image: d })
    }

    /// The order `Z` itself (`f = x`, trivial involution).
    pub fn rational() -> Self {
        NumberRing { f: IntPoly::x(), dagger_image: IntPoly::zero() }
    }

    /// Gaussian integers `Z[i]` with complex conjugation.
    pub fn gaussian() -> Self {
        NumberRing::new(IntPoly::from_i64(&[1, 0, 1]), IntPoly::from_i64(&[0, -1])).unwrap()
    }

    pub fn f(&self) -> &IntPoly {
        &self.f
    }

    pub fn dagger_image(&self) -> &IntPoly {
        &self.dagger_image
    }

    pub fn degree(&self) -> usize {
        self.f.degree().unwrap()
    }

    pub fn discriminant(&self) -> BigInt {
        if self.degree() == 1 {
            BigInt::one()
        } else {
            self.f.discriminant()
        }
    }

    /// Apply the involution to an element written as a polynomial in the
    /// generator.
    pub fn dagger_of(&self, elt: &IntPoly) -> IntPoly {
        elt.compose_mod(&self.dagger_image, &self.f)
    }
}

// ---------------------------------------------------------------------------
// SplitData and factor_p
// ---------------------------------------------------------------------------

/// Factorization data of an odd unramified prime: the irreducible factors of
/// `f mod p` in their fixed order, the residue degrees, and the permutation
/// the involution induces on the primes above `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitData {
    p: u64,
    factors: Vec<ModPoly>,
    dagger_perm: Vec<usize>,
}

impl SplitData {
    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn num_primes(&self) -> usize {
        self.factors.len()
    }

    pub fn factor(&self, i: usize) -> &ModPoly {
        &self.factors[i]
    }

    pub fn factors(&self) -> &[ModPoly] {
        &self.factors
    }

    pub fn residue_degree(&self, i: usize) -> usize {
        self.factors[i].degree().unwrap()
    }

    /// sigma with `(prime_i)^dagger = prime_{sigma(i)}`.
    pub fn dagger_perm(&self) -> &[usize] {
        &self.dagger_perm
    }
}

/// Factor `p * O` for an odd prime `p` not dividing `disc(f)`.
pub fn factor_p(ring: &NumberRing, p: u64) -> Result<SplitData, RingError> {
    if p == 2 {
        return Err(RingError::EvenPrime);
    }
    if !is_prime_u64(p) {
        return Err(RingError::NotPrime(p));
    }
    let fp = ring.f().reduce_mod(p);
    debug_assert_eq!(fp.degree(), ring.f().degree());
    if ring.degree() > 1 && fp.gcd(&fp.derivative()).degree() != Some(0) {
        return Err(RingError::Ramified { p });
    }
    let factors = fp.factor_squarefree_monic()?;
    let dp = ring.dagger_image().reduce_mod(p);
    let mut dagger_perm = Vec::with_capacity(factors.len());
    for g in &factors {
        // (p, g(x))^dagger = (p, g(dagger(x))); find which factor divides it.
        let image = g.compose_mod(&dp, &fp);
        let mut hits =
            (0..factors.len()).filter(|&j| image.rem(&factors[j]).is_zero()).collect::<Vec<_>>();
        if hits.len() != 1 {
            return Err(RingError::DaggerNotPermuting);
        }
        dagger_perm.push(hits.pop().unwrap());
    }
    // An involution that preserves residue degrees.
    for (i, &j) in dagger_perm.iter().enumerate() {
        if dagger_perm[j] != i || factors[i].degree() != factors[j].degree() {
            return Err(RingError::DaggerNotPermuting);
        }
    }
    Ok(SplitData { p, factors, dagger_perm })
}

/// Pairwise-orthogonal idempotents of `O/p^e O` summing to 1, one per prime
/// above `p`, each reducing mod `p` to the idempotent of its residue field.
/// Computed by Hensel-lifting the mod-`p` idempotents with the Newton step
/// `eps <- 3 eps^2 - 2 eps^3`, then verified exactly.
pub fn hensel_idempotents(ring: &NumberRing, split: &SplitData, e: u32) -> Vec<ModPoly> {
    assert!(e >= 1);
    let p = split.p;
    let ctx = Zpe::new(p, e);
    let q = ctx.modulus();
    let fq = ring.f().reduce_mod(q);
    let fp = ring.f().reduce_mod(p);
    let mut out = Vec::with_capacity(split.factors.len());
    for (i, g) in split.factors.iter().enumerate() {
        let eps0 = if split.factors.len() == 1 {
            ModPoly::one(p)
        } else {
            // complement = f/g mod p; Bezout gives v*complement = 1 mod g.
            let complement = fp.divrem(g).0;
            let (_, v) = crate::poly::bezout_coprime(g, &complement);
            v.mul(&complement).rem(&fp)
        };
        // Newton-lift to p^e: each round doubles the precision.
        let mut eps = eps0.reduce_to(q);
        let mut rounds = 0u32;
        let mut precision = 1u64;
        while precision < q {
            let sq = eps.mul(&eps).rem(&fq);
            let cube = sq.mul(&eps).rem(&fq);
            eps = sq.scalar_mul(3).sub(&cube.scalar_mul(2)).rem(&fq);
            precision = precision.saturating_mul(precision).max(precision * p);
            rounds += 1;
            assert!(rounds <= 64, "idempotent lifting failed to converge");
        }
        // Exact checks: idempotent, and congruent to eps0 mod p.
        assert_eq!(eps.mul(&eps).rem(&fq), eps, "lifted idempotent is not idempotent");
        assert_eq!(eps.reduce_to(p), eps0, "lifted idempotent drifted mod p");
        let _ = i;
        out.push(eps);
    }
    // Orthogonality and completeness, exactly.
    let mut sum = ModPoly::zero(q);
    for eps in &out {
        sum = sum.add(eps);
    }
    assert_eq!(sum, ModPoly::one(q), "idempotents do not sum to 1");
    for i in 0..out.len() {
        for j in 0..out.len() {
            if i != j {
                assert!(
                    out[i].mul(&out[j]).rem(&fq).is_zero(),
                    "idempotents {i} and {j} are not orthogonal"
                );
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// SplitRing: O/p^e O as a product of Galois local rings
// ---------------------------------------------------------------------------

/// One Galois local ring `A_j = (Z/p^e)[x]/(g_j)`, `g_j` irreducible mod `p`:
/// a local ring with principal maximal ideal `(p)` and residue field of
/// degree `deg g_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRing {
    pub p: u64,
    pub e: u32,
    pub degree: usize,
    /// Lift of `g_j` to `Z/p^e`.
    pub modulus: ModPoly,
}

/// The ring `O/p^e O` (so `R = O/pO` at `e = 1`, and the mod-`p^e` layer of
/// `O (x) Z_p` for `e > 1`) with its full component decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitRing {
    ctx: Zpe,
    modulus_poly: ModPoly,
    split: SplitData,
    lifted: Vec<ModPoly>,
    idempotents: Vec<ModPoly>,
    dagger: Option<ModPoly>,
}

impl SplitRing {
    pub fn from_number_ring(ring: &NumberRing, p: u64, e: u32) -> Result<SplitRing, RingError> {
        let split = factor_p(ring, p)?;
        let ctx = Zpe::new(p, e);
        let q = ctx.modulus();
        let lifted = if e == 1 {
            split.factors.clone()
        } else {
            hensel_lift_factors(ring.f(), &split.factors, ctx)
        };
        let idempotents = hensel_idempotents(ring, &split, e);
        let fq = ring.f().reduce_mod(q);
        let dagger = Some(ring.dagger_image().reduce_mod(q).rem(&fq));
        Ok(SplitRing { ctx, modulus_poly: fq, split, lifted, idempotents, dagger })
    }

    /// A single Galois local ring `(Z/p^e)[x]/(g)` with `g` irreducible mod
    /// `p`: e.g. `Z/p^e` itself via `g = x`, or `GR(p^e, d)` via a degree-`d`
    /// irreducible. No involution.
    pub fn from_local_polynomial(p: u64, e: u32, g: &IntPoly) -> Result<SplitRing, RingError> {
        if !g.is_monic() {
            return Err(RingError::NotMonic);
        }
        if !is_prime_u64(p) {
            return Err(RingError::NotPrime(p));
        }
        if p == 2 {
            return Err(RingError::EvenPrime);
        }
        let ctx = Zpe::new(p, e);
        let gp = g.reduce_mod(p);
        let irreducible = match gp.factor_squarefree_monic() {
            Ok(fs) => fs.len() == 1 && gp.gcd(&gp.derivative()).degree() == Some(0),
            Err(_) => false,
        };
        let irreducible = irreducible || gp.degree() == Some(1);
        if !irreducible {
            return Err(RingError::NotIrreducible);
        }
        let q = ctx.modulus();
        let split = SplitData { p, factors: vec![gp], dagger_perm: vec![0] };
        // The identity involution: these rings play the role of a single
        // local component, where any involution acts through the ambient
        // product structure.
        let dagger = Some(ModPoly::x(q).rem(&g.reduce_mod(q)));
        Ok(SplitRing {
            ctx,
            modulus_poly: g.reduce_mod(q),
            lifted: vec![g.reduce_mod(q)],
            idempotents: vec![ModPoly::one(q)],
            split,
            dagger,
        })
    }

    pub fn ctx(&self) -> Zpe {
        self.ctx
    }

    pub fn p(&self) -> u64 {
        self.ctx.p()
    }

    pub fn e(&self) -> u32 {
        self.ctx.e()
    }

    pub fn modulus_poly(&self) -> &ModPoly {
        &self.modulus_poly
    }

    pub fn split(&self) -> &SplitData {
        &self.split
    }

    pub fn num_components(&self) -> usize {
        self.split.num_primes()
    }

    pub fn residue_degree(&self, i: usize) -> usize {
        self.split.residue_degree(i)
    }

    pub fn idempotent(&self, i: usize) -> &ModPoly {
        &self.idempotents[i]
    }

    pub fn lifted_factor(&self, i: usize) -> &ModPoly {
        &self.lifted[i]
    }

    pub fn components(&self) -> Vec<LocalRing> {
        (0..self.num_components())
            .map(|i| LocalRing {
                p: self.p(),
                e: self.e(),
                degree: self.residue_degree(i),
                modulus: self.lifted[i].clone(),
            })
            .collect()
    }

    pub fn dagger_poly(&self) -> Option<&ModPoly> {
        self.dagger.as_ref()
    }

    pub fn dagger_perm(&self) -> &[usize] {
        self.split.dagger_perm()
    }

    /// Whether the involution exists and acts trivially on `O/pO`.
    pub fn dagger_is_trivial_mod_p(&self) -> bool {
        match &self.dagger {
            None => true,
            Some(d) => {
                let p = self.p();
                let fp = self.modulus_poly.reduce_to(p);
                d.reduce_to(p).rem(&fp) == ModPoly::x(p).rem(&fp)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// CyclotomicRing
// ---------------------------------------------------------------------------

/// `R_L = Z[zeta_{p^n}]`, presented as `Z[y]/(Phi_{p^n})`, with the involution
/// `iota : zeta -> zeta^{-1}` and the element `pi = zeta - zeta^{-1}`.
/// Construction verifies that `(pi)^phi(p^n) = (p)` as ideals and that
/// `iota(pi) = -pi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclotomicRing {
    p: u64,
    n: u32,
    pn: u64,
    phi_poly: IntPoly,
    iota_image: IntPoly,
}

/// Elements of a cyclotomic ring are integer polynomials in `zeta` of degree
/// below `phi(p^n)`.
pub type CycElt = IntPoly;

impl CyclotomicRing {
    pub fn new(p: u64, n: u32) -> Result<CyclotomicRing, RingError> {
        Self::with_cap(p, n, CYCLOTOMIC_CAP)
    }

    pub fn with_cap(p: u64, n: u32, cap: u64) -> Result<CyclotomicRing, RingError> {
        if p == 2 {
            return Err(RingError::EvenPrime);
        }
        if !is_prime_u64(p) {
            return Err(RingError::NotPrime(p));
        }
        assert!(n >= 1);
        let pn = p.checked_pow(n).ok_or_else(|| RingError::CapExceeded("p^n".into()))?;
        if pn > cap {
            return Err(RingError::CapExceeded(format!("p^n = {pn} exceeds cap {cap}")));
        }
        // Phi_{p^n}(y) = sum_{i<p} y^(i * p^(n-1)).
        let step = p.pow(n - 1) as usize;
        let mut coeffs = vec![BigInt::zero(); step * (p as usize - 1) + 1];
        for i in 0..p as usize {
            if i * step < coeffs.len() {
                coeffs[i * step] = BigInt::one();
            }
        }
        let phi_poly = IntPoly::new(coeffs);
        let degree = phi_poly.degree().unwrap();
        // iota: zeta -> zeta^(p^n - 1) = zeta^(-1).
        let mut iota_coeffs = vec![BigInt::zero(); pn as usize];
        iota_coeffs[(pn - 1) as usize] = BigInt::one();
        let iota_image = IntPoly::new(iota_coeffs).rem_monic(&phi_poly);
        let ring = CyclotomicRing { p, n, pn, phi_poly, iota_image };
        // iota is an automorphism of order 2 ...
        assert!(ring.phi_poly.compose_mod(&ring.iota_image, &ring.phi_poly).is_zero());
        assert_eq!(
            ring.iota_image.compose_mod(&ring.iota_image, &ring.phi_poly),
            IntPoly::x().rem_monic(&ring.phi_poly)
        );
        // ... sending pi to -pi ...
        let pi = ring.pi();
        assert_eq!(ring.iota(&pi), pi.scalar_mul(&BigInt::from(-1)));
        // ... and (pi)^phi = (p) as ideals, via Hermite forms of the
        // multiplication lattices.
        let pi_pow = ring.pow(&pi, degree as u64);
        let lattice_pi = ring.mult_matrix(&pi_pow).hermite_form().0;
        let lattice_p = IntMatrix::identity(degree).scalar_mul(&BigInt::from(p)).hermite_form().0;
        assert_eq!(lattice_pi, lattice_p, "(pi)^phi != (p)");
        debug_assert_eq!(ring.norm(&pi).abs(), BigInt::from(p));
        Ok(ring)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn pn(&self) -> u64 {
        self.pn
    }

    /// phi(p^n), the rank of the ring as a `Z`-lattice.
    pub fn degree(&self) -> usize {
        self.phi_poly.degree().unwrap()
    }

    pub fn phi_poly(&self) -> &IntPoly {
        &self.phi_poly
    }

    pub fn zeta(&self) -> CycElt {
        IntPoly::x()
    }

    pub fn zeta_inv(&self) -> CycElt {
        self.iota_image.clone()
    }

    /// `pi = zeta - zeta^{-1}`, a generator of the unique prime above `p`.
    pub fn pi(&self) -> CycElt {
        self.zeta().sub(&self.zeta_inv()).rem_monic(&self.phi_poly)
    }

    pub fn mul(&self, a: &CycElt, b: &CycElt) -> CycElt {
        a.mul(b).rem_monic(&self.phi_poly)
    }

    pub fn pow(&self, a: &CycElt, mut k: u64) -> CycElt {
        let mut acc = IntPoly::one();
        let mut base = a.rem_monic(&self.phi_poly);
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            k >>= 1;
        }
        acc
    }

    pub fn iota(&self, a: &CycElt) -> CycElt {
        a.compose_mod(&self.iota_image, &self.phi_poly)
    }

    /// Coordinates of an element on the power basis `1, zeta, ...`.
    pub fn coords(&self, a: &CycElt) -> Vec<BigInt> {
        let r = a.rem_monic(&self.phi_poly);
        (0..self.degree()).map(|i| r.coeff(i)).collect()
    }

    pub fn from_coords(&self, coords: &[BigInt]) -> CycElt {
        IntPoly::new(coords.to_vec()).rem_monic(&self.phi_poly)
    }

    /// Multiplication-by-`a` matrix on the power basis; row `i` holds the
    /// coordinates of `a * zeta^i`.
    pub fn mult_matrix(&self, a: &CycElt) -> IntMatrix {
        let d = self.degree();
        let mut rows = Vec::with_capacity(d);
        let mut cur = a.rem_monic(&self.phi_poly);
        for _ in 0..d {
            rows.push(self.coords(&cur));
            cur = self.mul(&cur, &IntPoly::x());
        }
        IntMatrix::from_rows(rows)
    }

    pub fn norm(&self, a: &CycElt) -> BigInt {
        self.mult_matrix(a).det_bareiss()
    }

    /// Exact division: `a / b` when `b` divides `a` in the ring.
    pub fn div_exact(&self, a: &CycElt, b: &CycElt) -> Option<CycElt> {
        let m = self.mult_matrix(b);
        let target = IntMatrix::from_rows(vec![self.coords(a)]);
        let x = m.solve_left(&target)?;
        Some(self.from_coords(x.row(0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_split_at_5() {
        let ring = NumberRing::gaussian();
        let split = factor_p(&ring, 5).unwrap();
        assert_eq!(split.num_primes(), 2);
        assert_eq!(split.factor(0), &ModPoly::from_signed(5, &[2, 1]));
        assert_eq!(split.factor(1), &ModPoly::from_signed(5, &[3, 1]));
        // x -> -x swaps the two primes: (x+2) composed with -x is -x+2,
        // proportional to x-2 = x+3.
        assert_eq!(split.dagger_perm(), &[1, 0]);
    }

    #[test]
    fn gaussian_inert_at_3() {
        let ring = NumberRing::gaussian();
        let split = factor_p(&ring, 3).unwrap();
        assert_eq!(split.num_primes(), 1);
        assert_eq!(split.residue_degree(0), 2);
        assert_eq!(split.dagger_perm(), &[0]);
    }

    #[test]
    fn even_prime_rejected() {
        let ring = NumberRing::gaussian();
        assert_eq!(factor_p(&ring, 2), Err(RingError::EvenPrime));
    }

    #[test]
    fn ramified_prime_rejected() {
        // disc(x^2+1) = -4; x^2 - 3 ramifies at 3.
        let ring = NumberRing::new(IntPoly::from_i64(&[-3, 0, 1]), IntPoly::from_i64(&[0, -1]))
            .unwrap();
        assert_eq!(factor_p(&ring, 3), Err(RingError::Ramified { p: 3 }));
    }

    #[test]
    fn invalid_dagger_rejected() {
        // x -> x + 1 is not a root of x^2 + 1.
        let err = NumberRing::new(IntPoly::from_i64(&[1, 0, 1]), IntPoly::from_i64(&[1, 1]));
        assert_eq!(err, Err(RingError::DaggerNotRoot));
    }

    #[test]
    fn idempotents_at_level_one_and_two() {
        let ring = NumberRing::gaussian();
        let split = factor_p(&ring, 5).unwrap();
        for e in [1u32, 2, 3] {
            let eps = hensel_idempotents(&ring, &split, e);
            assert_eq!(eps.len(), 2);
            // The asserts inside already verify eps_i^2 = eps_i, sum = 1,
            // orthogonality; spot-check the CRT property mod p at e = 1.
            if e == 1 {
                // eps_0 = 1 mod (x+2), 0 mod (x+3): evaluate at the roots.
                assert_eq!(eps[0].eval(3), 1); // x = -2 = 3
                assert_eq!(eps[0].eval(2), 0); // x = -3 = 2
            }
        }
    }

    #[test]
    fn single_factor_idempotent_is_one() {
        let ring = NumberRing::gaussian();
        let split = factor_p(&ring, 3).unwrap();
        let eps = hensel_idempotents(&ring, &split, 2);
        assert_eq!(eps, vec![ModPoly::one(9)]);
    }

    #[test]
    fn split_ring_local_constructors() {
        // Z/9 via g = x, GR(9,2) via an irreducible quadratic.
        let z9 = SplitRing::from_local_polynomial(3, 2, &IntPoly::x()).unwrap();
        assert_eq!(z9.num_components(), 1);
        assert_eq!(z9.residue_degree(0), 1);
        let gr = SplitRing::from_local_polynomial(3, 2, &IntPoly::from_i64(&[2, 2, 1])).unwrap();
        assert_eq!(gr.residue_degree(0), 2);
        // x^2 - 1 is not irreducible mod 3.
        assert!(SplitRing::from_local_polynomial(3, 2, &IntPoly::from_i64(&[-1, 0, 1])).is_err());
    }

    #[test]
    fn cyclotomic_z3() {
        let r = CyclotomicRing::new(3, 1).unwrap();
        assert_eq!(r.degree(), 2);
        // pi = zeta - zeta^2 = 1 + 2 zeta since zeta^2 = -1 - zeta.
        let pi = r.pi();
        assert_eq!(r.coords(&pi), vec![BigInt::from(1), BigInt::from(2)]);
        // pi^2 = -3.
        let pi2 = r.pow(&pi, 2);
        assert_eq!(r.coords(&pi2), vec![BigInt::from(-3), BigInt::from(0)]);
        assert_eq!(r.norm(&pi), BigInt::from(3));
    }

    #[test]
    fn cyclotomic_z9_and_caps() {
        let r = CyclotomicRing::new(3, 2).unwrap();
        assert_eq!(r.degree(), 6);
        // The constructor itself asserts (pi)^6 = (3).
        assert_eq!(CyclotomicRing::new(2, 1), Err(RingError::EvenPrime));
        assert!(matches!(CyclotomicRing::new(3, 4), Err(RingError::CapExceeded(_))));
    }

    #[test]
    fn iota_negates_pi_across_desk_range() {
        for (p, n) in [(3u64, 1u32), (3, 2), (3, 3), (5, 1), (5, 2)] {
            let r = CyclotomicRing::with_cap(p, n, 27).unwrap();
            let pi = r.pi();
            assert_eq!(r.iota(&pi), pi.scalar_mul(&BigInt::from(-1)), "p^n = {}", r.pn());
        }
    }

    #[test]
    fn div_exact_roundtrip() {
        let r = CyclotomicRing::new(3, 2).unwrap();
        let pi = r.pi();
        let a = r.pow(&pi, 3);
        let b = r.pow(&pi, 2);
        let quotient = r.div_exact(&a, &b).unwrap();
        assert_eq!(r.mul(&quotient, &b), a);
        // 1 is not divisible by pi.
        assert!(r.div_exact(&IntPoly::one(), &pi).is_none());
    }
}
