//! Polynomial arithmetic: arbitrary-precision integer polynomials and
//! polynomials over `Z/q` (`q` a prime or odd prime power).
//!
//! Coefficient lists are stored lowest degree first and kept normalized
//! (no trailing zeros; the zero polynomial has an empty list). Factorization
//! over `F_p` runs distinct-degree splitting first and finishes equal-degree
//! blocks by exhaustive search over monic polynomials in a fixed order, so
//! the output is deterministic.

use crate::linalg::{IntMatrix, ResidueMatrix, Zpe};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Search budget for the exhaustive equal-degree step (`p^d` candidates) and
/// for Kronecker divisor tuples in the integer irreducibility test.
const EDF_CAP: u64 = 10_000;
const KRONECKER_CAP: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    ZeroPolynomial,
    SearchCapExceeded(String),
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::ZeroPolynomial => write!(f, "the zero polynomial cannot be factored"),
            PolyError::SearchCapExceeded(what) => {
                write!(f, "exhaustive search cap exceeded: {what}")
            }
        }
    }
}

impl std::error::Error for PolyError {}

// ---------------------------------------------------------------------------
// Integer polynomials
// ---------------------------------------------------------------------------

/// Polynomial over `Z`, coefficients lowest degree first.
#[derive(Clone, PartialEq, Eq)]
pub struct IntPoly {
    c: Vec<BigInt>,
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| match i {
                0 => format!("{a}"),
                1 => format!("{a}*x"),
                _ => format!("{a}*x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

fn trim_big(mut c: Vec<BigInt>) -> Vec<BigInt> {
    while c.last().map_or(false, |x| x.is_zero()) {
        c.pop();
    }
    c
}

impl IntPoly {
    pub fn new(c: Vec<BigInt>) -> Self {
        IntPoly { c: trim_big(c) }
    }

    pub fn from_i64(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn zero() -> Self {
        IntPoly { c: vec![] }
    }

    pub fn one() -> Self {
        Self::from_i64(&[1])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.c.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    pub fn is_monic(&self) -> bool {
        self.c.last().map_or(false, |x| x.is_one())
    }

    pub fn add(&self, other: &IntPoly) -> IntPoly {
        let n = self.c.len().max(other.c.len());
        let mut c = vec![BigInt::zero(); n];
        for (i, x) in self.c.iter().enumerate() {
            c[i] += x;
        }
        for (i, x) in other.c.iter().enumerate() {
            c[i] += x;
        }
        IntPoly::new(c)
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let n = self.c.len().max(other.c.len());
        let mut c = vec![BigInt::zero(); n];
        for (i, x) in self.c.iter().enumerate() {
            c[i] += x;
        }
        for (i, x) in other.c.iter().enumerate() {
            c[i] -= x;
        }
        IntPoly::new(c)
    }

    pub fn mul(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut c = vec![BigInt::zero(); self.c.len() + other.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        IntPoly::new(c)
    }

    pub fn scalar_mul(&self, s: &BigInt) -> IntPoly {
        IntPoly::new(self.c.iter().map(|x| x * s).collect())
    }

    /// Division with remainder by a monic divisor: `self = q * div + r`.
    pub fn divrem_monic(&self, div: &IntPoly) -> (IntPoly, IntPoly) {
        assert!(div.is_monic(), "divisor must be monic");
        let d = div.degree().unwrap();
        let mut r = self.c.clone();
        if r.len() <= d {
            return (IntPoly::zero(), IntPoly::new(r));
        }
        let mut q = vec![BigInt::zero(); r.len() - d];
        for i in (d..r.len()).rev() {
            let lead = r[i].clone();
            if lead.is_zero() {
                continue;
            }
            q[i - d] = lead.clone();
            for j in 0..=d {
                let t = &lead * &div.c[j];
                r[i - d + j] -= t;
            }
        }
        (IntPoly::new(q), IntPoly::new(r))
    }

    pub fn rem_monic(&self, div: &IntPoly) -> IntPoly {
        self.divrem_monic(div).1
    }

    pub fn derivative(&self) -> IntPoly {
        if self.c.len() <= 1 {
            return IntPoly::zero();
        }
        IntPoly::new(self.c.iter().enumerate().skip(1).map(|(i, a)| a * BigInt::from(i)).collect())
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for a in self.c.iter().rev() {
            acc = acc * x + a;
        }
        acc
    }

    /// `self(g) mod f` for monic `f`.
    pub fn compose_mod(&self, g: &IntPoly, f: &IntPoly) -> IntPoly {
        let mut acc = IntPoly::zero();
        for a in self.c.iter().rev() {
            acc = acc.mul(g).add(&IntPoly::new(vec![a.clone()])).rem_monic(f);
        }
        acc
    }

    pub fn reduce_mod(&self, q: u64) -> ModPoly {
        let qi = BigInt::from(q);
        ModPoly::new(
            q,
            self.c
                .iter()
                .map(|x| {
                    let r = x % &qi;
                    let r = if r.is_negative() { r + &qi } else { r };
                    u64::try_from(&r).unwrap()
                })
                .collect(),
        )
    }

    /// Resultant of `self` and `other` via the Sylvester matrix.
    pub fn resultant(&self, other: &IntPoly) -> BigInt {
        let (n, m) = match (self.degree(), other.degree()) {
            (Some(n), Some(m)) => (n, m),
            _ => return BigInt::zero(),
        };
        if n == 0 {
            return self.c[0].clone().pow(m as u32);
        }
        if m == 0 {
            return other.c[0].clone().pow(n as u32);
        }
        let size = n + m;
        let mut s = IntMatrix::zero(size, size);
        for i in 0..m {
            for (j, a) in self.c.iter().enumerate() {
                s[(i, i + n - j)] = a.clone();
            }
        }
        for i in 0..n {
            for (j, a) in other.c.iter().enumerate() {
                s[(m + i, i + m - j)] = a.clone();
            }
        }
        s.det_bareiss()
    }

    /// Discriminant of a monic polynomial.
    pub fn discriminant(&self) -> BigInt {
        assert!(self.is_monic());
        let n = self.degree().unwrap();
        if n == 1 {
            return BigInt::one();
        }
        let res = self.resultant(&self.derivative());
        let sign = if (n * (n - 1) / 2) % 2 == 0 { 1 } else { -1 };
        res * BigInt::from(sign)
    }

    /// Exact irreducibility over `Q` for monic integer polynomials at desk
    /// degree. Strategy: squarefree test, then factor degree analysis modulo
    /// a batch of small primes, then a Kronecker interpolation search over
    /// the surviving candidate degrees.
    pub fn is_irreducible_monic(&self) -> Result<bool, PolyError> {
        assert!(self.is_monic(), "irreducibility test expects a monic polynomial");
        let n = self.degree().unwrap();
        if n == 0 {
            return Ok(false);
        }
        if n == 1 {
            return Ok(true);
        }
        if self.resultant(&self.derivative()).is_zero() {
            return Ok(false); // repeated factor
        }
        // Degrees d with 1 <= d <= n/2 that a factor could still have.
        let mut possible: Vec<bool> = vec![true; n / 2 + 1];
        possible[0] = false;
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
            let fp = self.reduce_mod(p);
            if fp.degree() != Some(n) {
                continue;
            }
            let fpd = fp.derivative();
            if fp.gcd(&fpd).degree() != Some(0) {
                continue; // not squarefree mod p, no degree information
            }
            let factors = match fp.factor_squarefree_monic() {
                Ok(fs) => fs,
                Err(_) => continue,
            };
            if factors.len() == 1 {
                return Ok(true);
            }
            let degs: Vec<usize> = factors.iter().map(|g| g.degree().unwrap()).collect();
            // Subset sums of the local degrees bound the global degrees.
            let mut sums = vec![false; n + 1];
            sums[0] = true;
            for d in degs {
                for s in (0..=n - d).rev() {
                    if sums[s] {
                        sums[s + d] = true;
                    }
                }
            }
            for d in 1..=n / 2 {
                if !sums[d] {
                    possible[d] = false;
                }
            }
            if (1..=n / 2).all(|d| !possible[d]) {
                return Ok(true);
            }
        }
        // Kronecker search for a monic factor of each surviving degree.
        for d in 1..=n / 2 {
            if !possible[d] {
                continue;
            }
            if self.kronecker_has_factor(d)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn kronecker_has_factor(&self, d: usize) -> Result<bool, PolyError> {
        // Evaluation points 0, 1, -1, 2, -2, ...
        let points: Vec<BigInt> = (0..d)
            .map(|i| {
                let k = ((i + 1) / 2) as i64;
                if i % 2 == 0 {
                    BigInt::from(k)
                } else {
                    BigInt::from(-k)
                }
            })
            .collect();
        let mut divisor_lists: Vec<Vec<BigInt>> = Vec::with_capacity(d);
        let mut total: u64 = 1;
        for a in &points {
            let v = self.eval(a);
            if v.is_zero() {
                return Ok(true); // x - a divides
            }
            let divs = signed_divisors(&v)?;
            total = total.saturating_mul(divs.len() as u64);
            if total > KRONECKER_CAP {
                return Err(PolyError::SearchCapExceeded(format!(
                    "Kronecker candidate count for degree {d}"
                )));
            }
            divisor_lists.push(divs);
        }
        // Rows indexed by monomial x^j, columns by evaluation point.
        let vm = IntMatrix::from_rows(
            (0..d).map(|j| points.iter().map(|a| a.pow(j as u32)).collect()).collect(),
        );
        let mut idx = vec![0usize; d];
        loop {
            // Candidate values of g - x^d at the points.
            let rhs: Vec<BigInt> =
                (0..d).map(|i| &divisor_lists[i][idx[i]] - points[i].pow(d as u32)).collect();
            let b = IntMatrix::from_rows(vec![rhs]);
            if let Some(x) = vm.solve_left(&b) {
                let mut coeffs: Vec<BigInt> = x.row(0).to_vec();
                coeffs.push(BigInt::one());
                let g = IntPoly::new(coeffs);
                if g.degree() == Some(d) {
                    let (_, r) = self.divrem_monic(&g);
                    if r.is_zero() {
                        return Ok(true);
                    }
                }
            }
            // Advance the tuple index.
            let mut k = 0;
            loop {
                if k == d {
                    return Ok(false);
                }
                idx[k] += 1;
                if idx[k] < divisor_lists[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// All divisors of `v` with both signs, or an error when `|v|` is too large
/// to factor by trial division at desk scale.
fn signed_divisors(v: &BigInt) -> Result<Vec<BigInt>, PolyError> {
    let abs = v.abs();
    let n = u64::try_from(&abs)
        .map_err(|_| PolyError::SearchCapExceeded("divisor enumeration of a huge value".into()))?;
    if n > 1_000_000_000_000 {
        return Err(PolyError::SearchCapExceeded("divisor enumeration of a huge value".into()));
    }
    let mut rest = n;
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += 1;
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    let mut divs: Vec<u64> = vec![1];
    for (p, e) in factors {
        let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
        for d in &divs {
            let mut pk = 1u64;
            for _ in 0..=e {
                next.push(d * pk);
                pk = pk.saturating_mul(p);
            }
        }
        divs = next;
    }
    divs.sort_unstable();
    let mut out = Vec::with_capacity(divs.len() * 2);
    for d in divs {
        out.push(BigInt::from(d));
        out.push(BigInt::from(-(d as i64)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Polynomials over Z/q
// ---------------------------------------------------------------------------

/// Polynomial over `Z/q`. Field-only operations (gcd, factorization) expect
/// prime `q`; arithmetic and division by unit-leading divisors work for any
/// odd prime power `q`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ModPoly {
    q: u64,
    c: Vec<u64>,
}

impl fmt::Debug for ModPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0 (mod {})", self.q);
        }
        let terms: Vec<String> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0)
            .map(|(i, a)| match i {
                0 => format!("{a}"),
                1 => format!("{a}x"),
                _ => format!("{a}x^{i}"),
            })
            .collect();
        write!(f, "{} (mod {})", terms.join(" + "), self.q)
    }
}

fn trim_u64(mut c: Vec<u64>) -> Vec<u64> {
    while c.last() == Some(&0) {
        c.pop();
    }
    c
}

impl ModPoly {
    pub fn new(q: u64, c: Vec<u64>) -> Self {
        ModPoly { q, c: trim_u64(c.into_iter().map(|x| x % q).collect()) }
    }

    pub fn from_signed(q: u64, c: &[i64]) -> Self {
        Self::new(q, c.iter().map(|&x| (x as i128).rem_euclid(q as i128) as u64).collect())
    }

    pub fn zero(q: u64) -> Self {
        ModPoly { q, c: vec![] }
    }

    pub fn one(q: u64) -> Self {
        Self::new(q, vec![1])
    }

    pub fn x(q: u64) -> Self {
        Self::new(q, vec![0, 1])
    }

    pub fn constant(q: u64, a: u64) -> Self {
        Self::new(q, vec![a])
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.c.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    pub fn is_monic(&self) -> bool {
        self.c.last() == Some(&1)
    }

    pub fn lead(&self) -> u64 {
        *self.c.last().expect("lead of zero polynomial")
    }

    fn addm(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.q as u128) as u64
    }

    fn subm(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + (self.q - b % self.q) as u128) % self.q as u128) as u64
    }

    fn mulm(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    fn invm(&self, a: u64) -> u64 {
        let (g, x, _) = egcd_i128(a as i128, self.q as i128);
        assert!(g == 1, "{} is not a unit mod {}", a, self.q);
        x.rem_euclid(self.q as i128) as u64
    }

    pub fn add(&self, other: &ModPoly) -> ModPoly {
        assert_eq!(self.q, other.q);
        let n = self.c.len().max(other.c.len());
        let mut c = vec![0u64; n];
        for (i, &x) in self.c.iter().enumerate() {
            c[i] = x;
        }
        for (i, &x) in other.c.iter().enumerate() {
            c[i] = self.addm(c[i], x);
        }
        ModPoly::new(self.q, c)
    }

    pub fn sub(&self, other: &ModPoly) -> ModPoly {
        assert_eq!(self.q, other.q);
        let n = self.c.len().max(other.c.len());
        let mut c = vec![0u64; n];
        for (i, &x) in self.c.iter().enumerate() {
            c[i] = x;
        }
        for (i, &x) in other.c.iter().enumerate() {
            c[i] = self.subm(c[i], x);
        }
        ModPoly::new(self.q, c)
    }

    pub fn mul(&self, other: &ModPoly) -> ModPoly {
        assert_eq!(self.q, other.q);
        if self.is_zero() || other.is_zero() {
            return ModPoly::zero(self.q);
        }
        let mut c = vec![0u64; self.c.len() + other.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.c.iter().enumerate() {
                c[i + j] = self.addm(c[i + j], self.mulm(a, b));
            }
        }
        ModPoly::new(self.q, c)
    }

    pub fn scalar_mul(&self, s: u64) -> ModPoly {
        ModPoly::new(self.q, self.c.iter().map(|&x| self.mulm(x, s)).collect())
    }

    /// Division with remainder; the divisor's leading coefficient must be a
    /// unit mod `q`.
    pub fn divrem(&self, div: &ModPoly) -> (ModPoly, ModPoly) {
        assert_eq!(self.q, div.q);
        let d = div.degree().expect("division by zero polynomial");
        let lead_inv = self.invm(div.lead());
        let mut r = self.c.clone();
        if r.len() <= d {
            return (ModPoly::zero(self.q), ModPoly::new(self.q, r));
        }
        let mut quo = vec![0u64; r.len() - d];
        for i in (d..r.len()).rev() {
            let coeff = self.mulm(r[i], lead_inv);
            if coeff == 0 {
                continue;
            }
            quo[i - d] = coeff;
            for j in 0..=d {
                r[i - d + j] = self.subm(r[i - d + j], self.mulm(coeff, div.c[j]));
            }
        }
        (ModPoly::new(self.q, quo), ModPoly::new(self.q, r))
    }

    pub fn rem(&self, div: &ModPoly) -> ModPoly {
        self.divrem(div).1
    }

    pub fn divides(&self, other: &ModPoly) -> bool {
        other.rem(self).is_zero()
    }

    /// Monic associate.
    pub fn monic(&self) -> ModPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.scalar_mul(self.invm(self.lead()))
    }

    /// Monic gcd over a prime field.
    pub fn gcd(&self, other: &ModPoly) -> ModPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    pub fn derivative(&self) -> ModPoly {
        if self.c.len() <= 1 {
            return ModPoly::zero(self.q);
        }
        ModPoly::new(
            self.q,
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &a)| self.mulm(a, (i as u64) % self.q))
                .collect(),
        )
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &a in self.c.iter().rev() {
            acc = self.addm(self.mulm(acc, x), a);
        }
        acc
    }

    /// `self^n mod m`.
    pub fn powmod(&self, mut n: u64, m: &ModPoly) -> ModPoly {
        let mut base = self.rem(m);
        let mut acc = ModPoly::one(self.q);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            n >>= 1;
        }
        acc
    }

    /// `self(g) mod f`.
    pub fn compose_mod(&self, g: &ModPoly, f: &ModPoly) -> ModPoly {
        let mut acc = ModPoly::zero(self.q);
        for &a in self.c.iter().rev() {
            acc = acc.mul(g).add(&ModPoly::constant(self.q, a)).rem(f);
        }
        acc
    }

    /// Evaluate at a square residue matrix (Horner), e.g. a module action.
    pub fn eval_matrix(&self, m: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!(m.rows(), m.cols());
        let ctx = m.ctx();
        assert_eq!(ctx.modulus(), self.q, "modulus mismatch in eval_matrix");
        let mut acc = ResidueMatrix::zero(ctx, m.rows(), m.cols());
        for &a in self.c.iter().rev() {
            acc = acc.mul(m).add_scalar_diag(a);
        }
        acc
    }

    pub fn lift(&self) -> IntPoly {
        IntPoly::new(self.c.iter().map(|&x| BigInt::from(x)).collect())
    }

    /// Reinterpret mod a new modulus (entries reduced).
    pub fn reduce_to(&self, q: u64) -> ModPoly {
        ModPoly::new(q, self.c.clone())
    }

    /// Squarefree decomposition of a monic polynomial over a prime field:
    /// pairwise coprime squarefree monic parts with multiplicities, sorted.
    pub fn squarefree_decomposition(&self) -> Vec<(ModPoly, u32)> {
        assert!(self.is_monic());
        let p = self.q;
        let mut out: Vec<(ModPoly, u32)> = Vec::new();
        let mut stack: Vec<(ModPoly, u32)> = vec![(self.clone(), 1)];
        while let Some((f, mult)) = stack.pop() {
            if f.degree() == Some(0) {
                continue;
            }
            let fd = f.derivative();
            if fd.is_zero() {
                // f = g(x^p); over F_p the p-th root just contracts exponents.
                let g = ModPoly::new(p, f.c.iter().step_by(p as usize).copied().collect::<Vec<_>>());
                stack.push((g, mult * p as u32));
                continue;
            }
            let mut c = f.gcd(&fd);
            let mut w = f.divrem(&c).0;
            let mut i = 1u32;
            while w.degree() != Some(0) {
                let y = w.gcd(&c);
                let z = w.divrem(&y).0;
                if z.degree().unwrap_or(0) > 0 {
                    out.push((z.monic(), i * mult));
                }
                w = y;
                c = c.divrem(&w).0;
                i += 1;
            }
            if c.degree().unwrap_or(0) > 0 {
                stack.push((c, mult));
            }
        }
        out.sort_by(|a, b| cmp_poly(&a.0, &b.0));
        out
    }

    /// Irreducible factors of a squarefree monic polynomial over a prime
    /// field, sorted by (degree, coefficient list). Distinct-degree splitting
    /// first; equal-degree blocks are finished by exhaustive search over
    /// monic polynomials of the right degree (capped at `p^d <= 10^4`).
    pub fn factor_squarefree_monic(&self) -> Result<Vec<ModPoly>, PolyError> {
        assert!(self.is_monic());
        let p = self.q;
        let mut out: Vec<ModPoly> = Vec::new();
        let mut g = self.clone();
        let x = ModPoly::x(p);
        if g.degree() == Some(0) {
            return Ok(out);
        }
        let mut frob = x.powmod(p, &g); // x^(p^d) mod g, advanced each round
        let mut d = 1usize;
        while g.degree().unwrap() >= 2 * d {
            let diff = frob.sub(&x);
            let h = diff.gcd(&g);
            if h.degree().unwrap_or(0) > 0 {
                out.extend(equal_degree_exhaustive(&h, d)?);
                g = g.divrem(&h).0;
                if g.degree() == Some(0) {
                    break;
                }
                frob = frob.rem(&g);
            }
            d += 1;
            frob = frob.powmod(p, &g);
        }
        if g.degree().unwrap_or(0) > 0 {
            out.push(g.monic());
        }
        out.sort_by(cmp_poly);
        Ok(out)
    }

    /// Full factorization over a prime field: unit times monic irreducible
    /// factors with multiplicities, in a fixed deterministic order.
    pub fn factor(&self) -> Result<(u64, Vec<(ModPoly, u32)>), PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let unit = self.lead();
        let monic = self.monic();
        if monic.degree() == Some(0) {
            return Ok((unit, vec![]));
        }
        let mut out: Vec<(ModPoly, u32)> = Vec::new();
        for (part, mult) in monic.squarefree_decomposition() {
            for irr in part.factor_squarefree_monic()? {
                out.push((irr, mult));
            }
        }
        out.sort_by(|a, b| cmp_poly(&a.0, &b.0));
        Ok((unit, out))
    }
}

/// Deterministic polynomial order: degree first, then the coefficient list
/// from the constant term up.
pub fn cmp_poly(a: &ModPoly, b: &ModPoly) -> std::cmp::Ordering {
    a.degree().cmp(&b.degree()).then_with(|| a.c.cmp(&b.c))
}

/// Every irreducible factor of `h` has degree `d`; find them all by trial
/// division against monic polynomials of degree `d` in lexicographic order.
fn equal_degree_exhaustive(h: &ModPoly, d: usize) -> Result<Vec<ModPoly>, PolyError> {
    let p = h.q;
    if h.degree() == Some(d) {
        return Ok(vec![h.monic()]);
    }
    let count = (p as u128).pow(d as u32);
    if count > EDF_CAP as u128 {
        return Err(PolyError::SearchCapExceeded(format!(
            "equal-degree split needs {count} candidates (cap {EDF_CAP})"
        )));
    }
    let mut out = Vec::new();
    let mut rest = h.monic();
    let mut idx = vec![0u64; d];
    'cand: loop {
        let mut coeffs = idx.clone();
        coeffs.push(1);
        let cand = ModPoly::new(p, coeffs);
        if cand.divides(&rest) {
            rest = rest.divrem(&cand).0;
            out.push(cand);
            if rest.degree() == Some(0) {
                break;
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                break 'cand;
            }
            idx[k] += 1;
            if idx[k] < p {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
    assert!(
        rest.degree() == Some(0),
        "equal-degree split failed to exhaust its input; inconsistent degree data"
    );
    Ok(out)
}

fn egcd_i128(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd_i128(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Hensel-lift a coprime monic factorization `f = prod(factors) (mod p)` to a
/// monic factorization mod `p^e`. `f` must be monic with squarefree reduction
/// mod `p`.
pub fn hensel_lift_factors(f: &IntPoly, factors: &[ModPoly], ctx: Zpe) -> Vec<ModPoly> {
    let p = ctx.p();
    let q = ctx.modulus();
    assert!(factors.iter().all(|g| g.modulus() == p && g.is_monic()));
    if factors.len() <= 1 {
        return vec![f.reduce_mod(q)];
    }
    // Peel one factor at a time against the product of the rest.
    let mut lifted: Vec<ModPoly> = Vec::with_capacity(factors.len());
    let mut remaining = f.reduce_mod(q);
    let mut remaining_p = f.reduce_mod(p);
    for (i, g0) in factors.iter().enumerate() {
        if i + 1 == factors.len() {
            lifted.push(remaining.clone());
            break;
        }
        let h0 = remaining_p.divrem(g0).0;
        let (g, h) = hensel_lift_pair(&remaining, g0, &h0, ctx);
        lifted.push(g);
        remaining = h;
        remaining_p = h0;
    }
    lifted
}

/// Lift `f = g0 * h0 (mod p)` with `gcd(g0, h0) = 1` to `f = g * h (mod p^e)`,
/// keeping `g`, `h` monic. Linear lifting, one power of `p` per round.
fn hensel_lift_pair(f_mod_q: &ModPoly, g0: &ModPoly, h0: &ModPoly, ctx: Zpe) -> (ModPoly, ModPoly) {
    let p = ctx.p();
    let q = ctx.modulus();
    let (u, v) = bezout_coprime(g0, h0);
    let mut g = g0.reduce_to(q);
    let mut h = h0.reduce_to(q);
    let mut pk: u64 = p;
    while pk < q {
        let prod = g.mul(&h);
        let diff = f_mod_q.sub(&prod);
        // defect = (f - g*h) / p^k, exact by the induction invariant
        let defect = ModPoly::new(
            q,
            diff.coeffs()
                .iter()
                .map(|&x| {
                    debug_assert_eq!(x % pk, 0, "Hensel defect not divisible by p^k");
                    x / pk
                })
                .collect(),
        );
        let defect_p = defect.reduce_to(p);
        let dg = v.mul(&defect_p).rem(g0).reduce_to(q).scalar_mul_raw(pk, q);
        let dh = u.mul(&defect_p).rem(h0).reduce_to(q).scalar_mul_raw(pk, q);
        g = g.add(&dg);
        h = h.add(&dh);
        pk = pk.saturating_mul(p);
    }
    (g, h)
}

impl ModPoly {
    fn scalar_mul_raw(&self, s: u64, q: u64) -> ModPoly {
        ModPoly::new(q, self.c.iter().map(|&x| ((x as u128 * s as u128) % q as u128) as u64).collect())
    }
}

/// Bezout coefficients for coprime polynomials over a prime field:
/// `u*a + v*b = 1`.
pub fn bezout_coprime(a: &ModPoly, b: &ModPoly) -> (ModPoly, ModPoly) {
    let p = a.modulus();
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut u0, mut u1) = (ModPoly::one(p), ModPoly::zero(p));
    let (mut v0, mut v1) = (ModPoly::zero(p), ModPoly::one(p));
    while !r1.is_zero() {
        let (quo, rem) = r0.divrem(&r1);
        let nu = u0.sub(&quo.mul(&u1));
        let nv = v0.sub(&quo.mul(&v1));
        r0 = r1;
        r1 = rem;
        u0 = u1;
        u1 = nu;
        v0 = v1;
        v1 = nv;
    }
    assert_eq!(r0.degree(), Some(0), "bezout_coprime on non-coprime input");
    let inv = r0.invm(r0.lead());
    (u0.scalar_mul(inv), v0.scalar_mul(inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_quadratic_split() {
        let f = ModPoly::from_signed(5, &[1, 0, 1]); // x^2 + 1 mod 5
        let (unit, factors) = f.factor().unwrap();
        assert_eq!(unit, 1);
        let expect: Vec<ModPoly> =
            vec![ModPoly::from_signed(5, &[2, 1]), ModPoly::from_signed(5, &[3, 1])];
        assert_eq!(factors.iter().map(|(g, _)| g.clone()).collect::<Vec<_>>(), expect);
        assert!(factors.iter().all(|&(_, m)| m == 1));
    }

    #[test]
    fn factor_x() {
        let f = ModPoly::from_signed(3, &[0, 1]);
        let (unit, factors) = f.factor().unwrap();
        assert_eq!(unit, 1);
        assert_eq!(factors, vec![(ModPoly::from_signed(3, &[0, 1]), 1)]);
    }

    #[test]
    fn factor_inert_quadratic() {
        let f = ModPoly::from_signed(3, &[1, 0, 1]); // x^2 + 1 irreducible mod 3
        let (_, factors) = f.factor().unwrap();
        assert_eq!(factors.len(), 1);
        assert_eq!(factors[0].0, f);
    }

    // Brute-force oracle: factor by trial division over all monic
    // polynomials in (degree, lex) order.
    fn oracle_factor(f: &ModPoly) -> Vec<(ModPoly, u32)> {
        let p = f.modulus();
        let mut rest = f.monic();
        let mut out: Vec<(ModPoly, u32)> = Vec::new();
        let mut d = 1usize;
        while rest.degree().unwrap() > 0 && d <= rest.degree().unwrap() {
            let mut idx = vec![0u64; d];
            'cand: loop {
                let mut coeffs = idx.clone();
                coeffs.push(1);
                let cand = ModPoly::new(p, coeffs);
                let mut mult = 0;
                while cand.divides(&rest) {
                    rest = rest.divrem(&cand).0;
                    mult += 1;
                }
                if mult > 0 {
                    out.push((cand, mult));
                }
                if rest.degree().unwrap() < d {
                    break;
                }
                let mut k = 0;
                loop {
                    if k == d {
                        break 'cand;
                    }
                    idx[k] += 1;
                    if idx[k] < p {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
            d += 1;
        }
        out.sort_by(|a, b| cmp_poly(&a.0, &b.0));
        out
    }

    #[test]
    fn factor_quartics_mod_3_against_oracle() {
        // x^4 + x^2 + 1 = (x+1)^2 (x+2)^2 over F_3, while x^4 + 1 splits into
        // two irreducible quadratics. Both checked against the exhaustive
        // trial-division oracle.
        for coeffs in [vec![1i64, 0, 1, 0, 1], vec![1, 0, 0, 0, 1]] {
            let f = ModPoly::from_signed(3, &coeffs);
            let (_, factors) = f.factor().unwrap();
            assert_eq!(factors, oracle_factor(&f), "mismatch for {:?}", f);
            let mut prod = ModPoly::one(3);
            for (g, m) in &factors {
                for _ in 0..*m {
                    prod = prod.mul(g);
                }
            }
            assert_eq!(prod, f);
        }
        let f = ModPoly::from_signed(3, &[1, 0, 1, 0, 1]);
        let (_, factors) = f.factor().unwrap();
        assert_eq!(
            factors,
            vec![(ModPoly::from_signed(3, &[1, 1]), 2), (ModPoly::from_signed(3, &[2, 1]), 2)]
        );
        let g = ModPoly::from_signed(3, &[1, 0, 0, 0, 1]);
        let (_, gf) = g.factor().unwrap();
        assert_eq!(
            gf,
            vec![
                (ModPoly::from_signed(3, &[2, 1, 1]), 1),
                (ModPoly::from_signed(3, &[2, 2, 1]), 1)
            ]
        );
    }

    #[test]
    fn random_factorizations_match_oracle() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(7);
        for p in [3u64, 5] {
            for _ in 0..40 {
                let deg = 1 + rng.usize_below(5);
                let mut coeffs: Vec<u64> = (0..deg).map(|_| rng.below(p)).collect();
                coeffs.push(1);
                let f = ModPoly::new(p, coeffs);
                let (_, factors) = f.factor().unwrap();
                assert_eq!(factors, oracle_factor(&f), "mismatch for {:?}", f);
            }
        }
    }

    #[test]
    fn irreducibility_over_z() {
        assert!(IntPoly::from_i64(&[0, 1]).is_irreducible_monic().unwrap()); // x
        assert!(IntPoly::from_i64(&[1, 0, 1]).is_irreducible_monic().unwrap()); // x^2+1
        assert!(IntPoly::from_i64(&[1, 1, 1]).is_irreducible_monic().unwrap()); // x^2+x+1
        // x^4 + 1: irreducible over Q but reducible mod every prime, so this
        // exercises the Kronecker fallback.
        assert!(IntPoly::from_i64(&[1, 0, 0, 0, 1]).is_irreducible_monic().unwrap());
        // Reducible cases.
        assert!(!IntPoly::from_i64(&[-1, 0, 1]).is_irreducible_monic().unwrap()); // (x-1)(x+1)
        assert!(!IntPoly::from_i64(&[1, 0, 1, 0, 1]).is_irreducible_monic().unwrap()); // x^4+x^2+1
        assert!(!IntPoly::from_i64(&[1, 2, 1]).is_irreducible_monic().unwrap()); // (x+1)^2
        // Eisenstein at 2: x^8 + 2.
        assert!(IntPoly::from_i64(&[2, 0, 0, 0, 0, 0, 0, 0, 1]).is_irreducible_monic().unwrap());
    }

    #[test]
    fn discriminant_values() {
        assert_eq!(IntPoly::from_i64(&[1, 0, 1]).discriminant(), BigInt::from(-4));
        assert_eq!(IntPoly::from_i64(&[1, 1, 1]).discriminant(), BigInt::from(-3));
    }

    #[test]
    fn hensel_lift_x2_plus_1_mod_25() {
        let f = IntPoly::from_i64(&[1, 0, 1]);
        let fp = f.reduce_mod(5);
        let factors = fp.factor_squarefree_monic().unwrap();
        let ctx = Zpe::new(5, 2);
        let lifted = hensel_lift_factors(&f, &factors, ctx);
        assert_eq!(lifted.len(), 2);
        let prod = lifted[0].mul(&lifted[1]);
        assert_eq!(prod, f.reduce_mod(25));
        for (l, orig) in lifted.iter().zip(&factors) {
            assert_eq!(l.reduce_to(5), *orig);
            assert!(l.is_monic());
        }
    }
}
