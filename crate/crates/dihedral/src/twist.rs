//! Group-ring twist calculus: cyclic quotients of a finite abelian group,
//! rational idempotents of the group algebra, twist-ideal lattices `I_L`,
//! their cyclotomic multiplier rings, and the composition law for coprime
//! twists.
//!
//! For a cyclic quotient `L` of degree `n`, the rational group algebra of
//! `Z/n` contains a unique component on which a generator acts faithfully;
//! `I_L` is the intersection of that component with the integral group ring,
//! a lattice of rank `phi(n)`. All lattice work is exact integer linear
//! algebra (Hermite forms and kernels); the idempotents are handled in
//! `|G|`-scaled integer form so no rational arithmetic is needed.

use crate::linalg::IntMatrix;
use crate::ring::{CyclotomicRing, NumberRing, RingError};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const GROUP_ORDER_CAP: u64 = 225;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TwistError {
    BadInvariantFactors,
    EvenOrder,
    CapExceeded(u64),
    TrivialQuotient,
    DegreeNotPrimePower(u64),
    NotCoprime(u64, u64),
    QuotientNotOfThisGroup,
    Ring(RingError),
}

impl fmt::Display for TwistError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwistError::BadInvariantFactors => {
                write!(f, "invariant factors must each exceed 1 and divide the next")
            }
            TwistError::EvenOrder => write!(f, "group order must be odd"),
            TwistError::CapExceeded(n) => {
                write!(f, "group order {n} exceeds the cap {GROUP_ORDER_CAP}")
            }
            TwistError::TrivialQuotient => {
                write!(f, "the trivial quotient carries no faithful representation")
            }
            TwistError::DegreeNotPrimePower(n) => {
                write!(f, "degree {n} is not a prime power")
            }
            TwistError::NotCoprime(a, b) => write!(f, "degrees {a} and {b} are not coprime"),
            TwistError::QuotientNotOfThisGroup => {
                write!(f, "cyclic quotient does not belong to this group")
            }
            TwistError::Ring(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TwistError {}

impl From<RingError> for TwistError {
    fn from(e: RingError) -> Self {
        TwistError::Ring(e)
    }
}

// ---------------------------------------------------------------------------
// AbelianGroup
// ---------------------------------------------------------------------------

/// Finite abelian group of odd order, given by invariant factors
/// `d_1 | d_2 | ... ` with each `d_i > 1`. Elements are tuples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbelianGroup {
    invariant_factors: Vec<u64>,
}

impl AbelianGroup {
    pub fn new(invariant_factors: Vec<u64>) -> Result<AbelianGroup, TwistError> {
        for w in invariant_factors.windows(2) {
            if w[1] % w[0] != 0 {
                return Err(TwistError::BadInvariantFactors);
            }
        }
        if invariant_factors.iter().any(|&d| d <= 1) {
            return Err(TwistError::BadInvariantFactors);
        }
        let order: u64 = invariant_factors.iter().product();
        if order % 2 == 0 {
            return Err(TwistError::EvenOrder);
        }
        if order > GROUP_ORDER_CAP {
            return Err(TwistError::CapExceeded(order));
        }
        Ok(AbelianGroup { invariant_factors })
    }

    pub fn cyclic(n: u64) -> Result<AbelianGroup, TwistError> {
        AbelianGroup::new(vec![n])
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.invariant_factors
    }

    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    /// The exponent: the largest invariant factor.
    pub fn exponent(&self) -> u64 {
        *self.invariant_factors.last().unwrap_or(&1)
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    pub fn zero(&self) -> Vec<u64> {
        vec![0; self.rank()]
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.invariant_factors)
            .map(|((&x, &y), &d)| (x + y) % d)
            .collect()
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().zip(&self.invariant_factors).map(|(&x, &d)| (d - x % d) % d).collect()
    }

    /// All elements in lexicographic order.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![vec![]];
        for &d in &self.invariant_factors {
            let mut next = Vec::with_capacity(out.len() * d as usize);
            for base in &out {
                for k in 0..d {
                    let mut v = base.clone();
                    v.push(k);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    /// Subgroup generated by a list of elements, as a sorted element list.
    pub fn subgroup_generated(&self, gens: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(self.zero());
        let mut frontier = vec![self.zero()];
        while let Some(cur) = frontier.pop() {
            for g in gens {
                let next = self.add(&cur, g);
                if seen.insert(next.clone()) {
                    frontier.push(next);
                }
            }
        }
        seen.into_iter().collect()
    }
}

// ---------------------------------------------------------------------------
// Cyclic quotients
// ---------------------------------------------------------------------------

/// A subgroup `H <= G` with cyclic quotient, presented through a character:
/// the projection `G -> Z/degree` is `g -> chi(g)`, `H` its kernel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicQuotient {
    /// Character coefficients: one per invariant factor.
    char_coeffs: Vec<u64>,
    degree: u64,
    /// Kernel as a sorted element list.
    kernel: Vec<Vec<u64>>,
    /// First group element (lex order) mapping to `1` in `Z/degree`
    /// (the zero tuple for the trivial quotient).
    generator_image: Vec<u64>,
}

impl CyclicQuotient {
    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn kernel(&self) -> &[Vec<u64>] {
        &self.kernel
    }

    pub fn generator_image(&self) -> &[u64] {
        &self.generator_image
    }

    /// The projection `G -> Z/degree`.
    pub fn project(&self, group: &AbelianGroup, g: &[u64]) -> u64 {
        let exp = group.exponent();
        let mut val: u64 = 0;
        for ((&a, &gi), &d) in self.char_coeffs.iter().zip(g).zip(group.invariant_factors()) {
            val = (val + a * gi % exp * (exp / d)) % exp;
        }
        // The character image is (exp/degree) Z / exp Z.
        debug_assert_eq!(val % (exp / self.degree), 0);
        (val / (exp / self.degree)) % self.degree
    }

    pub fn is_trivial(&self) -> bool {
        self.degree == 1
    }
}

/// All subgroups `H` with `G/H` cyclic, one `CyclicQuotient` each,
/// deduplicated and sorted by (degree, character coefficients). Includes the
/// trivial quotient.
pub fn cyclic_quotients(group: &AbelianGroup) -> Vec<CyclicQuotient> {
    let exp = group.exponent();
    let elements = group.elements();
    let mut by_kernel: BTreeMap<Vec<Vec<u64>>, CyclicQuotient> = BTreeMap::new();
    // Characters of G are tuples a with a_i mod d_i.
    let mut tuples = vec![vec![]];
    for &d in group.invariant_factors() {
        let mut next = Vec::with_capacity(tuples.len() * d as usize);
        for base in &tuples {
            for k in 0..d {
                let mut v = base.clone();
                v.push(k);
                next.push(v);
            }
        }
        tuples = next;
    }
    for a in tuples {
        // Order of the character: lcm over generators of the value orders.
        let mut degree = 1u64;
        for (i, (&ai, &d)) in a.iter().zip(group.invariant_factors()).enumerate() {
            let _ = i;
            let val = ai * (exp / d) % exp;
            let ord = exp / gcd(exp, val.max(0)).max(1);
            let ord = if val == 0 { 1 } else { ord };
            degree = lcm(degree, ord);
        }
        let chi = CyclicQuotient {
            char_coeffs: a.clone(),
            degree,
            kernel: vec![],
            generator_image: vec![],
        };
        let mut kernel: Vec<Vec<u64>> = Vec::new();
        let mut gen_image: Option<Vec<u64>> = None;
        for g in &elements {
            let v = chi.project(group, g);
            if v == 0 {
                kernel.push(g.clone());
            }
            if v == 1 && gen_image.is_none() && degree > 1 {
                gen_image = Some(g.clone());
            }
        }
        let generator_image = gen_image.unwrap_or_else(|| group.zero());
        kernel.sort();
        by_kernel.entry(kernel.clone()).or_insert(CyclicQuotient {
            char_coeffs: a,
            degree,
            kernel,
            generator_image,
        });
    }
    let mut out: Vec<CyclicQuotient> = by_kernel.into_values().collect();
    out.sort_by(|x, y| x.degree.cmp(&y.degree).then_with(|| x.char_coeffs.cmp(&y.char_coeffs)));
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn moebius(mut n: u64) -> i64 {
    let mut primes = 0;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            primes += 1;
        }
        p += 1;
    }
    if n > 1 {
        primes += 1;
    }
    if primes % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Ramanujan sum `c_n(k)`: the sum of `k`-th powers of the primitive `n`-th
/// roots of unity, computed by the Moebius formula.
pub fn ramanujan_sum(n: u64, k: u64) -> i64 {
    let g = gcd(n, k % n);
    let mut acc = 0i64;
    let mut d = 1;
    while d <= g {
        if g % d == 0 && n % d == 0 {
            acc += d as i64 * moebius(n / d);
        }
        d += 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// Twist ideals
// ---------------------------------------------------------------------------

/// The twist lattice of a cyclic quotient of degree `n`: the intersection of
/// the faithful rational component of `Q[Z/n]` with `Z[Z/n]`, of rank
/// `phi(n)`, together with the action of the quotient generator on it and
/// (for prime-power degree) the cyclotomic multiplier ring.
#[derive(Debug, Clone)]
pub struct TwistIdeal {
    quotient: CyclicQuotient,
    degree: u64,
    /// HNF basis rows, width `degree` (group-ring coordinates of `Z/n`).
    basis: IntMatrix,
    /// Action of the quotient generator in basis coordinates.
    zeta_action: IntMatrix,
    ring: Option<CyclotomicRing>,
}

impl TwistIdeal {
    pub fn quotient(&self) -> &CyclicQuotient {
        &self.quotient
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn zeta_action(&self) -> &IntMatrix {
        &self.zeta_action
    }

    pub fn ring(&self) -> Option<&CyclotomicRing> {
        self.ring.as_ref()
    }

    /// The rank-1 lattice of the trivial quotient (the whole group ring of
    /// the trivial group). Not a twist ideal in its own right — the trivial
    /// quotient has no faithful representation — but the correct neutral
    /// element for coprime composition.
    pub fn trivial(group: &AbelianGroup) -> TwistIdeal {
        let quotients = cyclic_quotients(group);
        let q = quotients.into_iter().find(|q| q.is_trivial()).expect("trivial quotient exists");
        TwistIdeal {
            quotient: q,
            degree: 1,
            basis: IntMatrix::identity(1),
            zeta_action: IntMatrix::identity(1),
            ring: None,
        }
    }
}

/// Coefficients of the `n`-scaled faithful idempotent of `Q[Z/n]`:
/// `n * e_L` has coefficient `c_n(k)` on the `k`-th group element (the
/// Moebius/subgroup-sum formula, kept in integers).
pub fn scaled_faithful_idempotent(n: u64) -> Vec<i64> {
    (0..n).map(|k| ramanujan_sum(n, k)).collect()
}

/// Matrix of multiplication by a group-ring element of `Z[Z/n]` on the
/// standard basis (row `i` holds the coordinates of `gamma^i * w`).
fn circulant(w: &[i64]) -> IntMatrix {
    let n = w.len();
    let mut m = IntMatrix::zero(n, n);
    for i in 0..n {
        for k in 0..n {
            m[(i, (i + k) % n)] = BigInt::from(w[k]);
        }
    }
    m
}

/// The twist ideal of a nontrivial cyclic quotient: kernel over `Z` of
/// `n(1 - e_L)` acting on the group ring, in Hermite form; verifies the rank
/// is `phi(degree)` and, for prime-power degree, attaches the cyclotomic
/// multiplier ring (whose constructor verifies the `pi`-ideal identity).
pub fn twist_ideal(group: &AbelianGroup, quotient: &CyclicQuotient) -> Result<TwistIdeal, TwistError> {
    if quotient.is_trivial() {
        return Err(TwistError::TrivialQuotient);
    }
    let n = quotient.degree();
    let scaled = scaled_faithful_idempotent(n);
    // n(1 - e_L) = n * 1 - (n e_L) as a group-ring element.
    let mut w: Vec<i64> = scaled.iter().map(|&c| -c).collect();
    w[0] += n as i64;
    let complement = circulant(&w);
    let kernel = complement.left_kernel();
    let (basis, _) = kernel.hermite_form();
    let rank = (0..basis.rows()).filter(|&r| !basis.row_is_zero(r)).count();
    let expected = euler_phi(n) as usize;
    assert_eq!(rank, expected, "twist lattice rank {rank} != phi({n}) = {expected}");
    let basis = IntMatrix::from_rows((0..rank).map(|r| basis.row(r).to_vec()).collect());
    // Generator action in basis coordinates: gamma acts by the cyclic shift.
    let mut shift = vec![0i64; n as usize];
    shift[1 % n as usize] = 1;
    let shift_m = circulant(&shift);
    let shifted = basis.mul(&shift_m);
    let zeta_action =
        basis.solve_left(&shifted).expect("twist lattice is stable under the group action");
    let ring = match prime_power(n) {
        Some((p, k)) => Some(CyclotomicRing::new(p, k)?),
        None => None,
    };
    let _ = group;
    Ok(TwistIdeal { quotient: quotient.clone(), degree: n, basis, zeta_action, ring })
}

pub fn euler_phi(n: u64) -> u64 {
    let mut result = n;
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

fn prime_power(n: u64) -> Option<(u64, u32)> {
    if n < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut rest = n;
            let mut k = 0;
            while rest % p == 0 {
                rest /= p;
                k += 1;
            }
            return if rest == 1 { Some((p, k)) } else { None };
        }
        p += 1;
    }
    Some((n, 1))
}

/// `dim_{F_p}(I_L / pi I_L)` for a prime-power-degree twist ideal, where
/// `pi = zeta - zeta^{-1}` acts through the lattice's ring structure. The
/// twist lattice is locally free of rank one, so this dimension is 1.
pub fn residue_dimension_at_pi(ideal: &TwistIdeal) -> Result<usize, TwistError> {
    let (p, _) = prime_power(ideal.degree()).ok_or(TwistError::DegreeNotPrimePower(ideal.degree()))?;
    let z = ideal.zeta_action();
    let n = ideal.degree();
    // zeta^{-1} = zeta^{n-1}.
    let mut zinv = IntMatrix::identity(z.rows());
    for _ in 0..(n - 1) {
        zinv = zinv.mul(z);
    }
    let pi_action = z.sub(&zinv);
    // dim of the cokernel of pi mod p.
    let ctx = crate::linalg::Zpe::new(p, 1);
    let rows: Vec<Vec<i64>> = (0..pi_action.rows())
        .map(|r| {
            pi_action.row(r)
                .iter()
                .map(|x| {
                    let m = BigInt::from(p);
                    let v = ((x % &m) + &m) % &m;
                    i64::try_from(&v).unwrap()
                })
                .collect()
        })
        .collect();
    let modp = crate::linalg::ResidueMatrix::from_signed_rows(ctx, &rows);
    let rank = modp.howell_form().rows();
    Ok(ideal.rank() - rank)
}

// ---------------------------------------------------------------------------
// O-coefficient twist lattices
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TwistIdealO {
    /// HNF basis inside `O[Z/n]`, coordinates ordered x-power major.
    pub basis: IntMatrix,
    pub rank: usize,
    /// Whether the kernel-defined lattice coincides with `O * I_L`.
    pub coincides_with_o_times_ideal: bool,
}

/// The `O`-coefficient twist lattice: the kernel of `n(1 - e_L)` acting
/// coefficient-wise on `O[Z/n]`, compared against the lattice `O * I_L`.
pub fn twist_ideal_o(
    group: &AbelianGroup,
    quotient: &CyclicQuotient,
    ring: &NumberRing,
) -> Result<TwistIdealO, TwistError> {
    let base = twist_ideal(group, quotient)?;
    let n = quotient.degree() as usize;
    let deg_f = ring.degree();
    let scaled = scaled_faithful_idempotent(quotient.degree());
    let mut w: Vec<i64> = scaled.iter().map(|&c| -c).collect();
    w[0] += quotient.degree() as i64;
    let complement = circulant(&w);
    // Block-diagonal extension to O[Z/n]: one copy per power-basis element.
    let dim = n * deg_f;
    let mut big = IntMatrix::zero(dim, dim);
    for a in 0..deg_f {
        for i in 0..n {
            for j in 0..n {
                big[(a * n + i, a * n + j)] = complement[(i, j)].clone();
            }
        }
    }
    let kernel = big.left_kernel();
    let (h, _) = kernel.hermite_form();
    let rank = (0..h.rows()).filter(|&r| !h.row_is_zero(r)).count();
    let basis = IntMatrix::from_rows((0..rank).map(|r| h.row(r).to_vec()).collect());
    // O * I_L: rows x^a * b_i.
    let mut rows = Vec::with_capacity(deg_f * base.rank());
    for a in 0..deg_f {
        for i in 0..base.rank() {
            let mut row = vec![BigInt::zero(); dim];
            for j in 0..n {
                row[a * n + j] = base.basis()[(i, j)].clone();
            }
            rows.push(row);
        }
    }
    let (o_lattice, _) = IntMatrix::from_rows(rows).hermite_form();
    let o_rank = (0..o_lattice.rows()).filter(|&r| !o_lattice.row_is_zero(r)).count();
    let o_basis = IntMatrix::from_rows((0..o_rank).map(|r| o_lattice.row(r).to_vec()).collect());
    let coincides = o_basis == basis;
    Ok(TwistIdealO { basis, rank, coincides_with_o_times_ideal: coincides })
}

// ---------------------------------------------------------------------------
// Coprime composition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    pub degree_m: u64,
    pub degree_m_prime: u64,
    pub degree_l: u64,
    /// `rank(I_L) = rank(I_M) * rank(I_M')`.
    pub rank_identity: bool,
    /// The product lattice lands inside `I_L`.
    pub contained: bool,
    /// Index of the product lattice in `I_L` (decimal).
    pub index: String,
    /// For each prime dividing either degree: whether the index is coprime
    /// to it.
    pub index_coprime_to: Vec<(u64, bool)>,
}

/// Verify the composition law for coprime twists: the multiplication map
/// `I_M (x) I_M' -> Z[Z/(m m')]` lands in `I_L` with finite index prime to
/// the degree primes; the rank identity `phi(m m') = phi(m) phi(m')` is
/// checked along the way.
pub fn compose_coprime(
    group: &AbelianGroup,
    t_m: &TwistIdeal,
    t_m_prime: &TwistIdeal,
) -> Result<CompositionReport, TwistError> {
    let m = t_m.degree();
    let mp = t_m_prime.degree();
    if gcd(m, mp) != 1 {
        return Err(TwistError::NotCoprime(m, mp));
    }
    let l_degree = m * mp;
    // Locate the quotient with kernel = intersection of the two kernels.
    let ker_m: std::collections::BTreeSet<_> = t_m.quotient().kernel().iter().cloned().collect();
    let ker_mp: std::collections::BTreeSet<_> =
        t_m_prime.quotient().kernel().iter().cloned().collect();
    let target: Vec<Vec<u64>> = ker_m.intersection(&ker_mp).cloned().collect();
    let l = cyclic_quotients(group)
        .into_iter()
        .find(|q| q.kernel() == target.as_slice())
        .ok_or(TwistError::QuotientNotOfThisGroup)?;
    if l.degree() != l_degree {
        return Err(TwistError::QuotientNotOfThisGroup);
    }
    let t_l = if l.is_trivial() { TwistIdeal::trivial(group) } else { twist_ideal(group, &l)? };
    let rank_identity = t_l.rank() == t_m.rank() * t_m_prime.rank();
    // Component embeddings Z/m -> Z/(m m'): a -> a * m' * inv(m' mod m),
    // so that 1 -> the m-component of 1 under CRT.
    let embed_index = |j: u64, from: u64, other: u64| -> usize {
        if from == 1 {
            return 0;
        }
        let beta = mod_inverse(other % from, from);
        ((j % from) * other % l_degree * beta % l_degree) as usize
    };
    let dim = l_degree as usize;
    let mut product_rows: Vec<Vec<BigInt>> = Vec::new();
    for i in 0..t_m.rank() {
        let mut a = vec![BigInt::zero(); dim];
        for j in 0..m {
            a[embed_index(j, m, mp)] += &t_m.basis()[(i, j as usize)];
        }
        for ip in 0..t_m_prime.rank() {
            let mut b = vec![BigInt::zero(); dim];
            for j in 0..mp {
                b[embed_index(j, mp, m)] += &t_m_prime.basis()[(ip, j as usize)];
            }
            // Group-ring convolution in Z[Z/(m m')].
            let mut prod = vec![BigInt::zero(); dim];
            for x in 0..dim {
                if a[x].is_zero() {
                    continue;
                }
                for y in 0..dim {
                    if b[y].is_zero() {
                        continue;
                    }
                    let t = &a[x] * &b[y];
                    prod[(x + y) % dim] += t;
                }
            }
            product_rows.push(prod);
        }
    }
    let product = IntMatrix::from_rows(product_rows);
    // Containment and index.
    let coeffs = t_l.basis().solve_left(&product);
    let (contained, index) = match coeffs {
        None => (false, BigInt::zero()),
        Some(c) => {
            let (h, _) = c.hermite_form();
            let rank = (0..h.rows()).filter(|&r| !h.row_is_zero(r)).count();
            if rank < t_l.rank() {
                (true, BigInt::zero())
            } else {
                let mut idx = BigInt::one();
                for i in 0..t_l.rank() {
                    idx *= &h[(i, i)];
                }
                (true, idx)
            }
        }
    };
    let mut primes: Vec<u64> = Vec::new();
    for d in [m, mp] {
        let mut rest = d;
        let mut p = 2;
        while p * p <= rest {
            if rest % p == 0 {
                primes.push(p);
                while rest % p == 0 {
                    rest /= p;
                }
            }
            p += 1;
        }
        if rest > 1 {
            primes.push(rest);
        }
    }
    primes.sort_unstable();
    primes.dedup();
    let index_coprime_to = primes
        .iter()
        .map(|&p| {
            let coprime = !index.is_zero() && (&index % BigInt::from(p)) != BigInt::zero();
            (p, coprime)
        })
        .collect();
    Ok(CompositionReport {
        degree_m: m,
        degree_m_prime: mp,
        degree_l: l_degree,
        rank_identity,
        contained,
        index: index.to_string(),
        index_coprime_to,
    })
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (m as i64, (a % m) as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert!(r == 1, "{a} is not invertible mod {m}");
    t.rem_euclid(m as i64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_quotients_of_z3() {
        let g = AbelianGroup::cyclic(3).unwrap();
        let qs = cyclic_quotients(&g);
        assert_eq!(qs.len(), 2);
        assert_eq!(qs.iter().map(|q| q.degree()).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn cyclic_quotients_of_z3_z3() {
        let g = AbelianGroup::new(vec![3, 3]).unwrap();
        let qs = cyclic_quotients(&g);
        assert_eq!(qs.len(), 5);
        let degrees: Vec<u64> = qs.iter().map(|q| q.degree()).collect();
        assert_eq!(degrees, vec![1, 3, 3, 3, 3]);
        // phi-sum identity: the rational group algebra decomposes with one
        // phi(deg)-dimensional block per cyclic quotient.
        let phi_sum: u64 = qs.iter().map(|q| euler_phi(q.degree())).sum();
        assert_eq!(phi_sum, g.order());
    }

    #[test]
    fn cyclic_quotients_of_z15() {
        let g = AbelianGroup::cyclic(15).unwrap();
        let qs = cyclic_quotients(&g);
        assert_eq!(qs.iter().map(|q| q.degree()).collect::<Vec<_>>(), vec![1, 3, 5, 15]);
        let phi_sum: u64 = qs.iter().map(|q| euler_phi(q.degree())).sum();
        assert_eq!(phi_sum, 15);
    }

    #[test]
    fn group_validation() {
        assert_eq!(AbelianGroup::cyclic(4), Err(TwistError::EvenOrder));
        assert_eq!(AbelianGroup::new(vec![3, 5]), Err(TwistError::BadInvariantFactors));
        assert_eq!(AbelianGroup::cyclic(227), Err(TwistError::CapExceeded(227)));
        assert!(AbelianGroup::new(vec![3, 15]).is_ok());
    }

    #[test]
    fn scaled_idempotents_are_idempotent_and_orthogonal() {
        // In Q[G], the |G|-scaled projectors satisfy W*W = |G| W and
        // W_L W_L' = 0, as exact integer group-ring identities.
        for g in [AbelianGroup::cyclic(9).unwrap(), AbelianGroup::new(vec![3, 3]).unwrap()] {
            let elements = g.elements();
            let index: BTreeMap<Vec<u64>, usize> =
                elements.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
            let qs = cyclic_quotients(&g);
            let projectors: Vec<Vec<i64>> = qs
                .iter()
                .map(|q| {
                    elements
                        .iter()
                        .map(|el| ramanujan_sum(q.degree(), q.project(&g, el)))
                        .collect()
                })
                .collect();
            let mul = |a: &[i64], b: &[i64]| -> Vec<i64> {
                let mut out = vec![0i64; elements.len()];
                for (i, x) in a.iter().enumerate() {
                    if *x == 0 {
                        continue;
                    }
                    for (j, y) in b.iter().enumerate() {
                        if *y == 0 {
                            continue;
                        }
                        let k = index[&g.add(&elements[i], &elements[j])];
                        out[k] += x * y;
                    }
                }
                out
            };
            let order = g.order() as i64;
            for (i, w) in projectors.iter().enumerate() {
                let sq = mul(w, w);
                let scaled: Vec<i64> = w.iter().map(|&x| x * order).collect();
                assert_eq!(sq, scaled, "projector {i} is not idempotent");
                for (j, w2) in projectors.iter().enumerate() {
                    if i != j {
                        assert!(mul(w, w2).iter().all(|&x| x == 0), "{i},{j} not orthogonal");
                    }
                }
            }
            // They sum to |G| * 1.
            let mut total = vec![0i64; elements.len()];
            for w in &projectors {
                for (k, x) in w.iter().enumerate() {
                    total[k] += x;
                }
            }
            let mut unit = vec![0i64; elements.len()];
            unit[index[&g.zero()]] = order;
            assert_eq!(total, unit);
        }
    }

    #[test]
    fn twist_ideal_z3_is_augmentation_ideal() {
        let g = AbelianGroup::cyclic(3).unwrap();
        let q = cyclic_quotients(&g).pop().unwrap();
        assert_eq!(q.degree(), 3);
        let t = twist_ideal(&g, &q).unwrap();
        assert_eq!(t.rank(), 2);
        // Augmentation ideal: kernel of the all-ones column.
        let aug = IntMatrix::from_i64_rows(&[vec![1], vec![1], vec![1]]);
        let (expected, _) = aug.left_kernel().hermite_form();
        let expected = IntMatrix::from_rows((0..2).map(|r| expected.row(r).to_vec()).collect());
        assert_eq!(t.basis(), &expected);
        assert!(t.ring().is_some());
    }

    #[test]
    fn twist_ideal_z9_rank_and_ring() {
        let g = AbelianGroup::cyclic(9).unwrap();
        let q = cyclic_quotients(&g).into_iter().find(|q| q.degree() == 9).unwrap();
        let t = twist_ideal(&g, &q).unwrap();
        assert_eq!(t.rank(), 6);
        assert_eq!(t.ring().unwrap().pn(), 9);
        assert_eq!(residue_dimension_at_pi(&t).unwrap(), 1);
    }

    #[test]
    fn trivial_quotient_rejected() {
        let g = AbelianGroup::cyclic(3).unwrap();
        let q = cyclic_quotients(&g).into_iter().find(|q| q.is_trivial()).unwrap();
        assert!(matches!(twist_ideal(&g, &q), Err(TwistError::TrivialQuotient)));
    }

    #[test]
    fn residue_dimension_requires_prime_power() {
        let g = AbelianGroup::cyclic(15).unwrap();
        let q = cyclic_quotients(&g).into_iter().find(|q| q.degree() == 15).unwrap();
        let t = twist_ideal(&g, &q).unwrap();
        assert!(matches!(
            residue_dimension_at_pi(&t),
            Err(TwistError::DegreeNotPrimePower(15))
        ));
    }

    #[test]
    fn twist_ideal_o_gaussian() {
        let g = AbelianGroup::cyclic(3).unwrap();
        let q = cyclic_quotients(&g).into_iter().find(|q| q.degree() == 3).unwrap();
        let o = twist_ideal_o(&g, &q, &NumberRing::gaussian()).unwrap();
        assert_eq!(o.rank, 4);
        assert!(o.coincides_with_o_times_ideal);
        // Rational O (f = x): degenerates to I_L itself.
        let o2 = twist_ideal_o(&g, &q, &NumberRing::rational()).unwrap();
        assert_eq!(o2.rank, 2);
        assert!(o2.coincides_with_o_times_ideal);
    }

    #[test]
    fn compose_coprime_z15() {
        let g = AbelianGroup::cyclic(15).unwrap();
        let qs = cyclic_quotients(&g);
        let q3 = qs.iter().find(|q| q.degree() == 3).unwrap();
        let q5 = qs.iter().find(|q| q.degree() == 5).unwrap();
        let t3 = twist_ideal(&g, q3).unwrap();
        let t5 = twist_ideal(&g, q5).unwrap();
        let report = compose_coprime(&g, &t3, &t5).unwrap();
        assert_eq!(report.degree_l, 15);
        assert!(report.rank_identity);
        assert!(report.contained);
        assert_eq!(t3.rank() * t5.rank(), 8);
        for (p, coprime) in &report.index_coprime_to {
            assert!(coprime, "index {} not coprime to {p}", report.index);
        }
    }

    #[test]
    fn compose_with_trivial_is_identity() {
        let g = AbelianGroup::cyclic(15).unwrap();
        let qs = cyclic_quotients(&g);
        let q3 = qs.iter().find(|q| q.degree() == 3).unwrap();
        let t3 = twist_ideal(&g, q3).unwrap();
        let triv = TwistIdeal::trivial(&g);
        let report = compose_coprime(&g, &t3, &triv).unwrap();
        assert_eq!(report.degree_l, 3);
        assert!(report.rank_identity);
        assert!(report.contained);
        assert_eq!(report.index, "1");
    }

    #[test]
    fn compose_rejects_non_coprime() {
        let g = AbelianGroup::new(vec![3, 3]).unwrap();
        let qs = cyclic_quotients(&g);
        let deg3: Vec<_> = qs.iter().filter(|q| q.degree() == 3).collect();
        let a = twist_ideal(&g, deg3[0]).unwrap();
        let b = twist_ideal(&g, deg3[1]).unwrap();
        assert!(matches!(compose_coprime(&g, &a, &b), Err(TwistError::NotCoprime(3, 3))));
    }
}
