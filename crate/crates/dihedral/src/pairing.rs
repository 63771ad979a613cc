//! Exact bilinear pairings on finite modules.
//!
//! A pairing is stored as a Gram matrix on the cyclic generators with values
//! in `Z/p^e_val`; bilinearity extends it to the whole module, so every axiom
//! is an exact matrix identity. The centerpiece is the constructive
//! hyperbolic decomposition: a nondegenerate, skew-symmetric, balanced
//! pairing on a finite module over a product of local rings splits the module
//! into paired isomorphic halves, certifying that every rank layer is even.

use crate::linalg::{span_intersection, span_sum, IntMatrix, ResidueMatrix, Zpe};
use crate::poly::ModPoly;
use crate::ring::CyclotomicRing;
use crate::torsion::{BaseRing, FiniteModule, ModuleError, ModuleLiteral, RankVector};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axiom {
    Nondegenerate,
    SkewSymmetric,
    DaggerAdjoint,
    CCompatible,
    Balanced,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Nondegenerate => "nondegenerate",
            Axiom::SkewSymmetric => "skew_symmetric",
            Axiom::DaggerAdjoint => "dagger_adjoint",
            Axiom::CCompatible => "c_compatible",
            Axiom::Balanced => "balanced",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairingError {
    GramShape,
    ValueNotKilled { row: usize, col: usize },
    MissingCMap,
    AxiomFailed(Axiom, String),
    DegenerateDuringDecomposition(String),
    BudgetExceeded,
    NonIntegralValue,
    NotSemilinear(String),
    Module(ModuleError),
}

impl fmt::Display for PairingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairingError::GramShape => write!(f, "Gram matrix shape does not match the module"),
            PairingError::ValueNotKilled { row, col } => write!(
                f,
                "Gram entry ({row},{col}) is not killed by the order of its generators"
            ),
            PairingError::MissingCMap => write!(f, "the module carries no c operator"),
            PairingError::AxiomFailed(a, w) => write!(f, "axiom {a} fails: {w}"),
            PairingError::DegenerateDuringDecomposition(w) => {
                write!(f, "degeneracy discovered mid-decomposition: {w}")
            }
            PairingError::BudgetExceeded => {
                write!(f, "decomposition exceeded its step budget; input data is corrupted")
            }
            PairingError::NonIntegralValue => {
                write!(f, "twist pairing value is not integral; the lattice is not a twist ideal")
            }
            PairingError::NotSemilinear(w) => write!(f, "pairing is not semilinear: {w}"),
            PairingError::Module(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PairingError {}

impl From<ModuleError> for PairingError {
    fn from(e: ModuleError) -> Self {
        PairingError::Module(e)
    }
}

// ---------------------------------------------------------------------------
// Pairing
// ---------------------------------------------------------------------------

/// Bilinear pairing `M x M -> Z/p^(e_val)`, stored on cyclic generators.
#[derive(Debug, Clone)]
pub struct Pairing {
    domain: FiniteModule,
    value_ctx: Zpe,
    gram: ResidueMatrix,
}

/// Serialized form of a pairing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingLiteral {
    pub module: ModuleLiteral,
    pub value_exponent: u32,
    pub gram: Vec<Vec<i64>>,
}

impl Pairing {
    pub fn new(
        domain: FiniteModule,
        value_exponent: u32,
        gram: &[Vec<i64>],
    ) -> Result<Pairing, PairingError> {
        let r = domain.num_generators();
        if gram.len() != r || gram.iter().any(|row| row.len() != r) {
            return Err(PairingError::GramShape);
        }
        let value_ctx = Zpe::new(domain.p(), value_exponent);
        let g = ResidueMatrix::from_signed_rows(value_ctx, gram);
        // [g_k, g_l] must be killed by min(order g_k, order g_l).
        for k in 0..r {
            for l in 0..r {
                let min_e = domain.orders()[k].min(domain.orders()[l]);
                let kill = value_ctx.p_power(min_e.min(value_exponent));
                if value_ctx.mul(g[(k, l)], kill) != 0 {
                    return Err(PairingError::ValueNotKilled { row: k, col: l });
                }
            }
        }
        Ok(Pairing { domain, value_ctx, gram: g })
    }

    pub fn domain(&self) -> &FiniteModule {
        &self.domain
    }

    pub fn value_exponent(&self) -> u32 {
        self.value_ctx.e()
    }

    pub fn gram(&self) -> &ResidueMatrix {
        &self.gram
    }

    pub fn to_literal(&self) -> PairingLiteral {
        PairingLiteral {
            module: self.domain.to_literal(),
            value_exponent: self.value_ctx.e(),
            gram: (0..self.gram.rows())
                .map(|r| self.gram.row(r).iter().map(|&x| x as i64).collect())
                .collect(),
        }
    }

    pub fn from_literal(base: BaseRing, lit: &PairingLiteral) -> Result<Pairing, PairingError> {
        let module = FiniteModule::from_literal(base, &lit.module)?;
        Pairing::new(module, lit.value_exponent, &lit.gram)
    }

    /// Evaluate on natural-coordinate elements.
    pub fn eval_natural(&self, x: &[u64], y: &[u64]) -> u64 {
        let r = self.domain.num_generators();
        assert_eq!(x.len(), r);
        assert_eq!(y.len(), r);
        let mut acc = 0u64;
        for k in 0..r {
            if x[k] == 0 {
                continue;
            }
            for l in 0..r {
                let t = self.value_ctx.mul(self.value_ctx.mul(x[k], y[l]), self.gram[(k, l)]);
                acc = self.value_ctx.add(acc, t);
            }
        }
        acc
    }

    /// Evaluate on embedded elements.
    pub fn eval(&self, x: &[u64], y: &[u64]) -> u64 {
        self.eval_natural(&self.domain.unembed_element(x), &self.domain.unembed_element(y))
    }

    // -- axiom checking -------------------------------------------------------

    fn natural_gram_identity(
        &self,
        left: Option<&ResidueMatrix>,
        right: Option<&ResidueMatrix>,
    ) -> bool {
        // left * G == G * right^T over the value context, with None = identity.
        let lhs = match left {
            Some(l) => l.mul(&self.gram),
            None => self.gram.clone(),
        };
        let rhs = match right {
            Some(r) => self.gram.mul(&r.transpose()),
            None => self.gram.clone(),
        };
        lhs == rhs
    }

    fn nat(&self, op: &ResidueMatrix) -> ResidueMatrix {
        self.domain.natural_matrix(op, self.value_ctx.modulus())
    }

    /// Radical `{x : [x, y] = 0 for all y}`, embedded generators.
    pub fn radical(&self) -> ResidueMatrix {
        value_hom_kernel(&self.domain, &self.gram)
    }

    /// Radical on the right slot.
    pub fn right_radical(&self) -> ResidueMatrix {
        value_hom_kernel(&self.domain, &self.gram.transpose())
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.radical().rows() == 0 && self.right_radical().rows() == 0
    }

    pub fn check_axiom(&self, axiom: Axiom) -> Result<(), String> {
        match axiom {
            Axiom::Nondegenerate => {
                let rad = self.radical();
                if rad.rows() > 0 {
                    let w = self.domain.unembed_element(rad.row(0));
                    return Err(format!("radical contains {w:?}"));
                }
                let rad = self.right_radical();
                if rad.rows() > 0 {
                    let w = self.domain.unembed_element(rad.row(0));
                    return Err(format!("right radical contains {w:?}"));
                }
                Ok(())
            }
            Axiom::SkewSymmetric => {
                if self.gram.transpose() == self.gram.neg() {
                    Ok(())
                } else {
                    Err("gram transpose is not the negated gram".into())
                }
            }
            Axiom::DaggerAdjoint => {
                let split = self.domain.base().split();
                let dagger = match split.dagger_poly() {
                    Some(d) => d.clone(),
                    None => return Err("base ring carries no involution".into()),
                };
                let a = self.nat(self.domain.act_x());
                let a_dag = self.nat(
                    &dagger
                        .reduce_to(self.domain.ctx().modulus())
                        .eval_matrix(self.domain.act_x()),
                );
                if self.natural_gram_identity(Some(&a), Some(&a_dag)) {
                    Ok(())
                } else {
                    Err("[x a, b] != [a, dagger(x) b] on generators".into())
                }
            }
            Axiom::CCompatible => {
                let c = match self.domain.act_c() {
                    Some(c) => self.nat(c),
                    None => return Err("module carries no c operator".into()),
                };
                // [c(a), b] == [a, c(b)]
                if c.mul(&self.gram) == self.gram.mul(&c.transpose()) {
                    Ok(())
                } else {
                    Err("[c(a), b] != [a, c(b)] on generators".into())
                }
            }
            Axiom::Balanced => {
                let a = self.nat(self.domain.act_x());
                if !self.natural_gram_identity(Some(&a), Some(&a)) {
                    return Err("[x a, b] != [a, x b] on generators".into());
                }
                if let Some(az) = self.domain.act_zeta() {
                    let z = self.nat(az);
                    if !self.natural_gram_identity(Some(&z), Some(&z)) {
                        return Err("[zeta a, b] != [a, zeta b] on generators".into());
                    }
                }
                Ok(())
            }
        }
    }

    /// Check a set of axioms; the report lists each with a pass flag and a
    /// witness description on failure.
    pub fn check_axioms(&self, axioms: &[Axiom]) -> AxiomReport {
        AxiomReport {
            results: axioms
                .iter()
                .map(|&a| (a, self.check_axiom(a).err()))
                .collect(),
        }
    }

    fn require(&self, axiom: Axiom) -> Result<(), PairingError> {
        self.check_axiom(axiom).map_err(|w| PairingError::AxiomFailed(axiom, w))
    }

    // -- twisting ---------------------------------------------------------------

    /// The c-twisted pairing `[x, y]' := [x, c(y)]`. Requires the module to
    /// carry a c operator and the pairing to be dagger-adjoint and
    /// c-compatible; the twist is then balanced, and skew-symmetric and
    /// nondegenerate whenever the original is.
    pub fn twist_by_c(&self) -> Result<Pairing, PairingError> {
        let c = match self.domain.act_c() {
            Some(c) => self.nat(c),
            None => return Err(PairingError::MissingCMap),
        };
        self.require(Axiom::DaggerAdjoint)?;
        self.require(Axiom::CCompatible)?;
        let gram = self.gram.mul(&c.transpose());
        Ok(Pairing { domain: self.domain.clone(), value_ctx: self.value_ctx, gram })
    }

    // -- orthogonal complements ---------------------------------------------------

    /// `{y : [x, y] = 0 for all x in the span of sub}` (embedded generators
    /// in, embedded Howell generators out).
    pub fn orthogonal_complement(&self, sub: &ResidueMatrix) -> ResidueMatrix {
        let h = sub.howell_form();
        if h.rows() == 0 {
            return self.domain.full_gens().howell_form();
        }
        // W[l][i] = [s_i, g_l]: the hom y -> ([s_i, y])_i has natural matrix
        // W over the value context.
        let r = self.domain.num_generators();
        let mut w = ResidueMatrix::zero(self.value_ctx, r, h.rows());
        for i in 0..h.rows() {
            let s_nat = self.domain.unembed_element(h.row(i));
            for l in 0..r {
                let mut acc = 0u64;
                for k in 0..r {
                    acc = self
                        .value_ctx
                        .add(acc, self.value_ctx.mul(s_nat[k], self.gram[(k, l)]));
                }
                w.set(l, i, acc);
            }
        }
        value_hom_kernel(&self.domain, &w)
    }

    // -- hyperbolic decomposition ---------------------------------------------------

    /// Split the module along a nondegenerate, skew-symmetric, balanced
    /// pairing into hyperbolic pairs, following the order-descent argument:
    /// in each local component repeatedly take `x` of maximal ideal-power
    /// order `t`, find `y` with `[pi^(t-1) x, y] != 0`, split off the span of
    /// `{x, y}`, and recurse on its orthogonal complement.
    pub fn hyperbolic_decompose(&self) -> Result<HyperbolicDecomposition, PairingError> {
        self.require(Axiom::Nondegenerate)?;
        self.require(Axiom::SkewSymmetric)?;
        self.require(Axiom::Balanced)?;
        let m = &self.domain;
        let mut pairs: Vec<HyperbolicPair> = Vec::new();
        let mut layer_counts = vec![0usize; m.base().num_components()];
        let budget_total = m.size().min(1 << 40) as usize + 8;
        let mut budget = budget_total;
        for comp in m.components() {
            let mut w = m.full_gens().mul(&comp.projector).howell_form();
            while w.rows() > 0 {
                if budget == 0 {
                    return Err(PairingError::BudgetExceeded);
                }
                budget -= 1;
                // Maximal pi-order among the current generators; the first
                // generator attaining it is the pivot (deterministic).
                let orders: Vec<u32> =
                    (0..w.rows()).map(|i| pi_order(&comp.pi_op, w.row(i))).collect();
                let t = *orders.iter().max().unwrap();
                debug_assert!(t >= 1);
                let xi = orders.iter().position(|&o| o == t).unwrap();
                let x = w.row(xi).to_vec();
                // pi^(t-1) x pairs nontrivially with some generator.
                let mut xt = x.clone();
                for _ in 1..t {
                    xt = comp.pi_op.apply_row(&xt);
                }
                let y = (0..w.rows())
                    .map(|i| w.row(i).to_vec())
                    .find(|cand| self.eval(&xt, cand) != 0)
                    .ok_or_else(|| {
                        PairingError::DegenerateDuringDecomposition(format!(
                            "no partner for a maximal-order element in component {}",
                            comp.index
                        ))
                    })?;
                if pi_order(&comp.pi_op, &y) != t {
                    return Err(PairingError::DegenerateDuringDecomposition(
                        "partner order does not match the maximal order".into(),
                    ));
                }
                let span_x = m.algebra_span(&x);
                let span_y = m.algebra_span(&y);
                if span_x.span_size() != span_y.span_size() {
                    return Err(PairingError::DegenerateDuringDecomposition(
                        "paired spans have different sizes".into(),
                    ));
                }
                let u = span_sum(&span_x, &span_y);
                let u_perp = self.orthogonal_complement(&u);
                if span_intersection(&u, &u_perp).rows() != 0 {
                    return Err(PairingError::DegenerateDuringDecomposition(
                        "hyperbolic block meets its complement".into(),
                    ));
                }
                let rest = span_intersection(&u_perp, &w);
                if u.span_size() * rest.span_size() != w.span_size() {
                    return Err(PairingError::DegenerateDuringDecomposition(
                        "block and complement do not fill the component".into(),
                    ));
                }
                pairs.push(HyperbolicPair {
                    x: m.unembed_element(&x),
                    y: m.unembed_element(&y),
                    order_exp: t,
                    component: comp.index,
                });
                layer_counts[comp.index] += 1;
                w = rest;
            }
        }
        // Assemble the two halves and certify.
        let mut x_rows: Vec<Vec<u64>> = Vec::new();
        let mut y_rows: Vec<Vec<u64>> = Vec::new();
        for pair in &pairs {
            let xe = m.embed_element(&pair.x);
            let ye = m.embed_element(&pair.y);
            for r in m.algebra_span(&xe).row_vecs() {
                x_rows.push(r);
            }
            for r in m.algebra_span(&ye).row_vecs() {
                y_rows.push(r);
            }
        }
        let width = m.num_generators();
        let m_prime = if x_rows.is_empty() {
            ResidueMatrix::empty(m.ctx(), width)
        } else {
            ResidueMatrix::from_rows(m.ctx(), &x_rows).howell_form()
        };
        let m_double = if y_rows.is_empty() {
            ResidueMatrix::empty(m.ctx(), width)
        } else {
            ResidueMatrix::from_rows(m.ctx(), &y_rows).howell_form()
        };
        if span_intersection(&m_prime, &m_double).rows() != 0
            || m_prime.span_size() * m_double.span_size() != m.size()
            || m.submodule_invariants(&m_prime) != m.submodule_invariants(&m_double)
        {
            return Err(PairingError::DegenerateDuringDecomposition(
                "assembled halves do not decompose the module".into(),
            ));
        }
        let layer_ranks = RankVector(layer_counts.iter().map(|&c| 2 * c).collect());
        Ok(HyperbolicDecomposition { pairs, m_prime, m_double, layer_ranks })
    }

    /// Certify evenness of the p-layer rank vector: twist by c, then
    /// decompose hyperbolically. Requires dagger-adjointness and
    /// c-compatibility.
    pub fn evenness_certificate(&self) -> Result<(RankVector, HyperbolicDecomposition), PairingError> {
        self.require(Axiom::DaggerAdjoint)?;
        self.require(Axiom::CCompatible)?;
        let twisted = self.twist_by_c()?;
        let decomposition = twisted.hyperbolic_decompose()?;
        Ok((decomposition.layer_ranks.clone(), decomposition))
    }

    // -- Tate orthogonality ------------------------------------------------------

    /// For each prime index `i`: the orthogonal complement of the
    /// `prime_i`-torsion equals the sum of the `prime_q`-torsions over
    /// `q != sigma(i)`, exactly.
    pub fn tate_orthogonality(&self) -> Result<TateOrthReport, PairingError> {
        self.require(Axiom::Nondegenerate)?;
        self.require(Axiom::DaggerAdjoint)?;
        if !self.domain.is_p_torsion() {
            return Err(PairingError::Module(ModuleError::NotPTorsion));
        }
        let m = &self.domain;
        let split = m.base().split();
        let sigma = split.dagger_perm().to_vec();
        let q = m.ctx().modulus();
        let kernels: Vec<ResidueMatrix> = (0..split.num_components())
            .map(|i| {
                let gi = split.split().factor(i).reduce_to(q);
                m.operator_kernel(&gi.eval_matrix(m.act_x()))
            })
            .collect();
        let mut checks = Vec::new();
        for i in 0..split.num_components() {
            let complement = self.orthogonal_complement(&kernels[i]);
            let mut expected = m.empty_gens();
            for (qi, ker) in kernels.iter().enumerate() {
                if qi != sigma[i] {
                    expected = span_sum(&expected, ker);
                }
            }
            checks.push(TatePrimeCheck { prime: i, holds: complement == expected.howell_form() });
        }
        Ok(TateOrthReport { checks })
    }
}

/// Smallest `t >= 0` with `x * pi_op^t = 0`.
fn pi_order(pi_op: &ResidueMatrix, x: &[u64]) -> u32 {
    let mut cur = x.to_vec();
    let mut t = 0u32;
    while cur.iter().any(|&v| v != 0) {
        cur = pi_op.apply_row(&cur);
        t += 1;
        assert!(t <= 64, "pi-order runaway: operator is not nilpotent on the module");
    }
    t
}

/// Kernel of the hom `M -> (Z/p^ev)^w` given by a natural-coordinate matrix
/// whose row `k` is killed by `p^(order of generator k)`. Embedded Howell
/// generators in the module's own context.
fn value_hom_kernel(domain: &FiniteModule, w_nat: &ResidueMatrix) -> ResidueMatrix {
    let p = domain.p();
    let ev = w_nat.ctx().e();
    let e_dom = domain.ctx().e();
    let ej = e_dom.max(ev);
    let joint = Zpe::new(p, ej);
    let r = domain.num_generators();
    let cols = w_nat.cols();
    let mut b = ResidueMatrix::zero(joint, r, cols);
    for k in 0..r {
        let ek = domain.orders()[k];
        for l in 0..cols {
            let v = if ek >= ev {
                joint.mul(w_nat[(k, l)], joint.p_power(ek - ev))
            } else {
                let s = joint.p_power(ev - ek);
                debug_assert_eq!(w_nat[(k, l)] % s, 0, "kill condition violated");
                w_nat[(k, l)] / s
            };
            b.set(k, l, v);
        }
    }
    // Lattice of the module at the joint exponent.
    let mut lattice = ResidueMatrix::zero(joint, r, r);
    for k in 0..r {
        lattice.set(k, k, joint.p_power(ej - domain.orders()[k]));
    }
    let ker = span_intersection(&b.kernel(), &lattice);
    // Rescale down to the module's own context.
    let scale = joint.p_power(ej - e_dom);
    let rows: Vec<Vec<u64>> = (0..ker.rows())
        .map(|i| {
            ker.row(i)
                .iter()
                .map(|&x| {
                    debug_assert_eq!(x % scale, 0);
                    x / scale
                })
                .collect()
        })
        .collect();
    if rows.is_empty() {
        ResidueMatrix::empty(domain.ctx(), r)
    } else {
        ResidueMatrix::from_rows(domain.ctx(), &rows).howell_form()
    }
}

// ---------------------------------------------------------------------------
// Reports and certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AxiomReport {
    /// Each requested axiom with `None` on success or a witness description.
    pub results: Vec<(Axiom, Option<String>)>,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.results.iter().all(|(_, w)| w.is_none())
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (axiom, witness) in &self.results {
            match witness {
                None => writeln!(f, "{axiom}: ok")?,
                Some(w) => writeln!(f, "{axiom}: FAIL ({w})")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperbolicPair {
    /// Natural coordinates of the two paired elements.
    pub x: Vec<u64>,
    pub y: Vec<u64>,
    /// Common ideal-power order exponent.
    pub order_exp: u32,
    /// Component index the pair lives in.
    pub component: usize,
}

#[derive(Debug, Clone)]
pub struct HyperbolicDecomposition {
    pub pairs: Vec<HyperbolicPair>,
    /// Span of all first elements (embedded Howell form).
    pub m_prime: ResidueMatrix,
    /// Span of all second elements.
    pub m_double: ResidueMatrix,
    /// Per-component count of cyclic summands (necessarily even).
    pub layer_ranks: RankVector,
}

impl HyperbolicDecomposition {
    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TatePrimeCheck {
    pub prime: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TateOrthReport {
    pub checks: Vec<TatePrimeCheck>,
}

impl TateOrthReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

// ---------------------------------------------------------------------------
// Hermitian pairing on twist lattices
// ---------------------------------------------------------------------------

/// The Hermitian form `f(a, b) = pi^(-2 p^(n-1)) a iota(b)` on a twist
/// lattice, evaluated on an integral basis mapped into `Z[zeta_{p^n}]`.
#[derive(Debug, Clone)]
pub struct HermitianPairing {
    ring: CyclotomicRing,
    basis: Vec<crate::ring::CycElt>,
    gram: Vec<Vec<crate::ring::CycElt>>,
    perfect: bool,
}

impl HermitianPairing {
    pub fn ring(&self) -> &CyclotomicRing {
        &self.ring
    }

    pub fn gram(&self) -> &[Vec<crate::ring::CycElt>] {
        &self.gram
    }

    pub fn basis(&self) -> &[crate::ring::CycElt] {
        &self.basis
    }

    /// Whether the ring ideal generated by the Gram values is the unit
    /// ideal, i.e. the induced ring-valued form is perfect on this instance.
    pub fn is_perfect(&self) -> bool {
        self.perfect
    }
}

/// Build the Hermitian twist form on a lattice basis given in group-ring
/// coordinates (width `p^n`, one coordinate per group element): each basis
/// row is mapped to the cyclotomic ring by `gamma -> zeta`, the products
/// `a * iota(b)` must be divisible by `pi^(2 p^(n-1))`, and the quotients
/// form the Gram matrix. Hermitian symmetry `f(b, a) = iota(f(a, b))` is
/// verified exactly.
pub fn twist_pairing_f(
    ring: &CyclotomicRing,
    lattice_rows: &[Vec<BigInt>],
) -> Result<HermitianPairing, PairingError> {
    let pn = ring.pn() as usize;
    let exponent = 2 * ring.pn() / ring.p(); // 2 p^(n-1)
    let pi_pow = ring.pow(&ring.pi(), exponent);
    let theta = |row: &Vec<BigInt>| -> crate::ring::CycElt {
        assert_eq!(row.len(), pn, "lattice row width must be the group order");
        ring.from_coords(row)
    };
    let basis: Vec<crate::ring::CycElt> = lattice_rows.iter().map(theta).collect();
    let mut gram = Vec::with_capacity(basis.len());
    for a in &basis {
        let mut row = Vec::with_capacity(basis.len());
        for b in &basis {
            let prod = ring.mul(a, &ring.iota(b));
            let val = ring.div_exact(&prod, &pi_pow).ok_or(PairingError::NonIntegralValue)?;
            row.push(val);
        }
        gram.push(row);
    }
    // Hermitian symmetry.
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if ring.iota(&gram[i][j]) != gram[j][i] {
                return Err(PairingError::AxiomFailed(
                    Axiom::SkewSymmetric,
                    format!("Hermitian symmetry fails at ({i},{j})"),
                ));
            }
        }
    }
    // Perfectness of the ring-valued form: the ideal generated by the Gram
    // values is everything.
    let degree = ring.degree();
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for row in &gram {
        for v in row {
            let mm = ring.mult_matrix(v);
            for r in 0..mm.rows() {
                rows.push(mm.row(r).to_vec());
            }
        }
    }
    let perfect = if rows.is_empty() {
        false
    } else {
        let (h, _) = IntMatrix::from_rows(rows).hermite_form();
        let mut full = true;
        for i in 0..degree {
            if h[(i, i)] != BigInt::from(1) {
                full = false;
            }
        }
        full
    };
    Ok(HermitianPairing { ring: ring.clone(), basis, gram, perfect })
}

// ---------------------------------------------------------------------------
// Semilinear pairings and the adjoint transfer
// ---------------------------------------------------------------------------

/// Pairing with values in the twist ring tensored down to `Z/p^e`, i.e. in
/// `(Z/p^e)[y]/(Phi_{p^n})`, semilinear over the zeta-action:
/// `<zeta x, y> = zeta <x, y> = <x, zeta^{-1} y>`.
#[derive(Debug, Clone)]
pub struct SemilinearPairing {
    domain: FiniteModule,
    cyclotomic: CyclotomicRing,
    value_exp: u32,
    /// Gram entries as polynomials mod `(p^e, Phi)`.
    gram: Vec<Vec<ModPoly>>,
}

impl SemilinearPairing {
    pub fn new(
        domain: FiniteModule,
        cyclotomic: CyclotomicRing,
        value_exp: u32,
        gram: Vec<Vec<ModPoly>>,
    ) -> Result<SemilinearPairing, PairingError> {
        if domain.act_zeta().is_none() {
            return Err(PairingError::NotSemilinear("domain carries no zeta action".into()));
        }
        let r = domain.num_generators();
        if gram.len() != r || gram.iter().any(|row| row.len() != r) {
            return Err(PairingError::GramShape);
        }
        let p = SemilinearPairing { domain, cyclotomic, value_exp, gram };
        p.verify_semilinear()?;
        Ok(p)
    }

    pub fn domain(&self) -> &FiniteModule {
        &self.domain
    }

    fn q(&self) -> u64 {
        Zpe::new(self.domain.p(), self.value_exp).modulus()
    }

    fn phi_q(&self) -> ModPoly {
        self.cyclotomic.phi_poly().reduce_mod(self.q())
    }

    fn zeta_value(&self) -> ModPoly {
        ModPoly::x(self.q())
    }

    /// Value-ring linear combination of Gram rows by a natural matrix.
    fn act_on_gram(&self, nat: &ResidueMatrix, side_left: bool) -> Vec<Vec<ModPoly>> {
        let r = self.domain.num_generators();
        let q = self.q();
        let phi = self.phi_q();
        let mut out = vec![vec![ModPoly::zero(q); r]; r];
        for k in 0..r {
            for l in 0..r {
                let mut acc = ModPoly::zero(q);
                for m in 0..r {
                    let (coeff, val) = if side_left {
                        (nat[(k, m)], &self.gram[m][l])
                    } else {
                        (nat[(l, m)], &self.gram[k][m])
                    };
                    if coeff != 0 {
                        acc = acc.add(&val.scalar_mul(coeff));
                    }
                }
                out[k][l] = acc.rem(&phi);
            }
        }
        out
    }

    fn scale_gram_by(&self, s: &ModPoly) -> Vec<Vec<ModPoly>> {
        let phi = self.phi_q();
        self.gram
            .iter()
            .map(|row| row.iter().map(|v| v.mul(s).rem(&phi)).collect())
            .collect()
    }

    fn verify_semilinear(&self) -> Result<(), PairingError> {
        let value_ctx = Zpe::new(self.domain.p(), self.value_exp);
        let az = self.domain.act_zeta().unwrap().clone();
        let z_nat = self.domain.natural_matrix(&az, value_ctx.modulus());
        // <zeta x, y> = zeta <x, y>
        let lhs = self.act_on_gram(&z_nat, true);
        let scaled = self.scale_gram_by(&self.zeta_value());
        if lhs != scaled {
            return Err(PairingError::NotSemilinear(
                "(zeta g_k, g_l) != zeta * (g_k, g_l); witness (zeta, g_k, g_l)".into(),
            ));
        }
        // <x, zeta^{-1} y> = zeta <x, y>
        let zinv_embedded = invert_operator(&az, self.cyclotomic.pn());
        let zinv_nat = self.domain.natural_matrix(&zinv_embedded, value_ctx.modulus());
        let rhs = self.act_on_gram(&zinv_nat, false);
        if rhs != scaled {
            return Err(PairingError::NotSemilinear(
                "(g_k, zeta^{-1} g_l) != zeta * (g_k, g_l); witness (zeta, g_k, g_l)".into(),
            ));
        }
        Ok(())
    }

    /// Semilinear radical: elements pairing to zero in the value ring.
    pub fn radical(&self) -> ResidueMatrix {
        // Flatten the phi value coordinates into separate Z/p^e columns.
        let r = self.domain.num_generators();
        let deg = self.cyclotomic.degree();
        let value_ctx = Zpe::new(self.domain.p(), self.value_exp);
        let mut w = ResidueMatrix::zero(value_ctx, r, r * deg);
        for k in 0..r {
            for l in 0..r {
                for d in 0..deg {
                    w.set(k, l * deg + d, self.gram[k][l].coeff(d));
                }
            }
        }
        value_hom_kernel(&self.domain, &w)
    }

    /// Compose with a linear functional `tau` on the value ring to obtain an
    /// iota-adjoint scalar pairing. `tau` is given by its values on the
    /// power basis of the twist ring, mod `p^e`. The transported pairing is
    /// verified iota-adjoint; when `tau_perfect` is declared and the input
    /// is nondegenerate, nondegeneracy of the output is verified too.
    pub fn transfer_by_tau(
        &self,
        tau: &[u64],
        tau_perfect: bool,
    ) -> Result<Pairing, PairingError> {
        let deg = self.cyclotomic.degree();
        assert_eq!(tau.len(), deg, "tau must list values on the power basis");
        let value_ctx = Zpe::new(self.domain.p(), self.value_exp);
        let r = self.domain.num_generators();
        let mut gram = ResidueMatrix::zero(value_ctx, r, r);
        for k in 0..r {
            for l in 0..r {
                let mut acc = 0u64;
                for d in 0..deg {
                    acc = value_ctx.add(acc, value_ctx.mul(tau[d], self.gram[k][l].coeff(d)));
                }
                gram.set(k, l, acc);
            }
        }
        let out = Pairing { domain: self.domain.clone(), value_ctx, gram };
        // iota-adjoint: [zeta x, y] = [x, zeta^{-1} y].
        let az = self.domain.act_zeta().unwrap().clone();
        let z_nat = out.nat(&az);
        let zinv_nat = out.nat(&invert_operator(&az, self.cyclotomic.pn()));
        if !out.natural_gram_identity(Some(&z_nat), Some(&zinv_nat)) {
            return Err(PairingError::AxiomFailed(
                Axiom::DaggerAdjoint,
                "transferred pairing is not iota-adjoint".into(),
            ));
        }
        if tau_perfect && self.radical().rows() == 0 && !out.is_nondegenerate() {
            return Err(PairingError::AxiomFailed(
                Axiom::Nondegenerate,
                "tau was declared perfect-preserving but nondegeneracy did not transfer".into(),
            ));
        }
        Ok(out)
    }
}

/// `op^(k)` for the operator power `zeta^{p^n - 1} = zeta^{-1}`.
fn invert_operator(op: &ResidueMatrix, pn: u64) -> ResidueMatrix {
    let mut acc = ResidueMatrix::identity(op.ctx(), op.rows());
    let mut base = op.clone();
    let mut k = pn - 1;
    while k > 0 {
        if k & 1 == 1 {
            acc = acc.mul(&base);
        }
        base = base.mul(&base);
        k >>= 1;
    }
    acc
}

// ---------------------------------------------------------------------------
// Constructors for hyperbolic pairings (used by generators and tests)
// ---------------------------------------------------------------------------

pub mod build {
    use super::*;
    use crate::ring::SplitRing;
    use crate::rng::SplitMix64;
    use crate::torsion::companion_rows;

    /// Hyperbolic balanced skew pairing over a single-component local ring
    /// `A = (Z/p^e)[x]/(g)`: the module is a sum of pairs
    /// `A/p^(t) x_k + A/p^(t) y_k` (one `t` per entry of `layers`), and the
    /// Gram couples each pair through the top-coefficient functional of `A`,
    /// scaled to respect the layer order.
    pub fn hyperbolic_balanced(split: &SplitRing, layers: &[u32]) -> Pairing {
        assert_eq!(split.num_components(), 1, "single local component expected");
        let e = split.e();
        let p = split.p();
        let g_e = split.lifted_factor(0);
        let d = g_e.degree().unwrap();
        let q = Zpe::new(p, e).modulus();
        // lambda(x^(i+j)) Hankel block: the matrix of (a, b) -> top coeff of
        // a b mod g.
        let mut hankel = vec![vec![0i64; d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut mono = vec![0u64; i + j + 1];
                mono[i + j] = 1;
                let reduced = ModPoly::new(q, mono).rem(g_e);
                hankel[i][j] = reduced.coeff(d - 1) as i64;
            }
        }
        let mut orders: Vec<u32> = Vec::new();
        let mut blocks: Vec<Vec<Vec<i64>>> = Vec::new();
        for &t in layers {
            assert!(t >= 1 && t <= e);
            // x half then y half for this layer.
            let g_t = g_e.reduce_to(Zpe::new(p, t).modulus());
            let comp = companion_rows(&g_t);
            blocks.push(comp.clone());
            blocks.push(comp);
            orders.extend(std::iter::repeat(t).take(2 * d));
        }
        let r = orders.len();
        let mut act = vec![vec![0i64; r]; r];
        let mut offset = 0;
        for b in &blocks {
            for i in 0..d {
                for j in 0..d {
                    act[offset + i][offset + j] = b[i][j];
                }
            }
            offset += d;
        }
        let base = BaseRing::Split(split.clone());
        let module = FiniteModule::new(base, orders, &act, None, None).expect("valid module");
        // Gram: per layer pair, [[0, p^(e-t) H], [-p^(e-t) H, 0]].
        let mut gram = vec![vec![0i64; r]; r];
        let mut offset = 0;
        for &t in layers {
            let scale = p.pow(e - t) as i64;
            for i in 0..d {
                for j in 0..d {
                    gram[offset + i][offset + d + j] = scale * hankel[i][j];
                    gram[offset + d + i][offset + j] = -scale * hankel[i][j];
                }
            }
            offset += 2 * d;
        }
        Pairing::new(module, e, &gram).expect("hyperbolic gram is consistent")
    }

    /// Transport a pairing along a random automorphism of the module that
    /// commutes with the ring action (so every axiom is preserved and the
    /// hyperbolic structure is scrambled). The automorphism is assembled
    /// blockwise from multiplications by random ring elements, with the
    /// divisibility a map from a smaller-order block into a larger one
    /// requires, and rejected until invertible.
    pub fn scramble_by_automorphism(
        pairing: &Pairing,
        layers: &[u32],
        rng: &mut SplitMix64,
    ) -> Pairing {
        let m = pairing.domain();
        let split = m.base().split();
        let e = split.e();
        let p = split.p();
        let g_e = split.lifted_factor(0);
        let d = g_e.degree().unwrap();
        let q = Zpe::new(p, e).modulus();
        // Cyclic block structure: 2 blocks per layer, each d wide.
        let mut block_orders: Vec<u32> = Vec::new();
        for &t in layers {
            block_orders.push(t);
            block_orders.push(t);
        }
        let nb = block_orders.len();
        let r = m.num_generators();
        for _attempt in 0..64 {
            let mut u = vec![vec![0i64; r]; r];
            for bi in 0..nb {
                for bj in 0..nb {
                    let t_i = block_orders[bi];
                    let t_j = block_orders[bj];
                    // Map A/p^(t_i) -> A/p^(t_j): multiplication by a random
                    // element divisible by p^(max(0, t_j - t_i)).
                    let scale = p.pow(t_j.saturating_sub(t_i));
                    let coeffs: Vec<u64> =
                        (0..d).map(|_| rng.below(q) / scale * scale).collect();
                    let a = ModPoly::new(q, coeffs);
                    // Rows: coordinates of a * x^row mod g, in the target block.
                    let mut cur = a.clone();
                    let qt = p.pow(t_j);
                    for row in 0..d {
                        let reduced = cur.rem(g_e);
                        for col in 0..d {
                            u[bi * d + row][bj * d + col] = (reduced.coeff(col) % qt) as i64;
                        }
                        cur = cur.mul(&ModPoly::x(q)).rem(g_e);
                    }
                }
            }
            let Ok(op) = m.embed_operator(&u) else { continue };
            // Invertible iff the kernel (within the lattice) is trivial.
            if m.operator_kernel(&op).rows() != 0 {
                continue;
            }
            // Commutes with the ring action, so it is a module automorphism.
            let commutator = op.mul(m.act_x()).sub(&m.act_x().mul(&op));
            if m.operator_kernel(&commutator).span_size() != m.size() {
                continue;
            }
            // Transport the Gram: gram'el(k, l) = [g_k U, g_l U].
            let mut gram = vec![vec![0i64; r]; r];
            for k in 0..r {
                let mut unit = vec![0u64; r];
                unit[k] = 1;
                let gk = op.apply_row(&m.embed_element(&unit));
                for l in 0..r {
                    let mut unit_l = vec![0u64; r];
                    unit_l[l] = 1;
                    let gl = op.apply_row(&m.embed_element(&unit_l));
                    gram[k][l] = pairing.eval(&gk, &gl) as i64;
                }
            }
            return Pairing::new(m.clone(), pairing.value_exponent(), &gram)
                .expect("transported gram is consistent");
        }
        panic!("failed to sample an invertible module automorphism");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::IntPoly;
    use crate::ring::{NumberRing, SplitRing};
    use crate::torsion::component_sum_module;

    fn f9() -> SplitRing {
        SplitRing::from_local_polynomial(3, 1, &IntPoly::from_i64(&[2, 2, 1])).unwrap()
    }

    fn z9() -> SplitRing {
        SplitRing::from_local_polynomial(3, 2, &IntPoly::x()).unwrap()
    }

    fn gr92() -> SplitRing {
        SplitRing::from_local_polynomial(3, 2, &IntPoly::from_i64(&[2, 2, 1])).unwrap()
    }

    #[test]
    fn hyperbolic_plane_over_f3() {
        let split = SplitRing::from_local_polynomial(3, 1, &IntPoly::x()).unwrap();
        let p = build::hyperbolic_balanced(&split, &[1]);
        let report =
            p.check_axioms(&[Axiom::Nondegenerate, Axiom::SkewSymmetric, Axiom::Balanced]);
        assert!(report.all_hold(), "{report}");
        let dec = p.hyperbolic_decompose().unwrap();
        assert_eq!(dec.num_pairs(), 1);
        assert_eq!(dec.layer_ranks, RankVector(vec![2]));
    }

    #[test]
    fn hyperbolic_plane_over_z9() {
        let p = build::hyperbolic_balanced(&z9(), &[2]);
        let dec = p.hyperbolic_decompose().unwrap();
        assert_eq!(dec.num_pairs(), 1);
        assert_eq!(dec.pairs[0].order_exp, 2);
    }

    #[test]
    fn degenerate_gram_reported() {
        let split = SplitRing::from_local_polynomial(3, 1, &IntPoly::x()).unwrap();
        let base = BaseRing::Split(split);
        let m = FiniteModule::new(base, vec![1, 1], &[vec![0, 0], vec![0, 0]], None, None).unwrap();
        let p = Pairing::new(m, 1, &[vec![0, 0], vec![0, 0]]).unwrap();
        let report = p.check_axioms(&[Axiom::Nondegenerate]);
        assert!(!report.all_hold());
        // Witness is the first generator.
        let w = &report.results[0].1;
        assert!(w.as_ref().unwrap().contains("[1, 0]"));
    }

    #[test]
    fn no_nondegenerate_skew_pairing_on_one_generator() {
        // Over Z/3 with a single generator, [g,g] = 0 forces degeneracy:
        // exhaust all 3 gram values.
        let split = SplitRing::from_local_polynomial(3, 1, &IntPoly::x()).unwrap();
        let base = BaseRing::Split(split);
        for v in 0..3i64 {
            let m =
                FiniteModule::new(base.clone(), vec![1], &[vec![0]], None, None).unwrap();
            let p = Pairing::new(m, 1, &[vec![v]]).unwrap();
            let skew = p.check_axiom(Axiom::SkewSymmetric).is_ok();
            let nondeg = p.is_nondegenerate();
            assert!(!(skew && nondeg), "gram [{v}] cannot be both skew and nondegenerate");
        }
    }

    #[test]
    fn scrambled_decompositions_verify() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(2024);
        for (split, layer_sets) in [
            (f9(), vec![vec![1u32], vec![1, 1]]),
            (z9(), vec![vec![1], vec![2], vec![2, 1], vec![2, 2, 1]]),
            (gr92(), vec![vec![1]]),
        ] {
            for layers in layer_sets {
                let base_pairing = build::hyperbolic_balanced(&split, &layers);
                let scrambled = build::scramble_by_automorphism(&base_pairing, &layers, &mut rng);
                let report = scrambled.check_axioms(&[
                    Axiom::Nondegenerate,
                    Axiom::SkewSymmetric,
                    Axiom::Balanced,
                ]);
                assert!(report.all_hold(), "layers {layers:?}: {report}");
                let dec = scrambled.hyperbolic_decompose().unwrap();
                assert_eq!(dec.num_pairs(), layers.len(), "layers {layers:?}");
                // Exhaustive certification: halves intersect trivially and
                // their sizes multiply to the module order (checked inside),
                // plus every element decomposes uniquely.
                let m = scrambled.domain();
                let total = m.size();
                let prime_elems = dec.m_prime.enumerate_span(total as usize);
                let double_elems = dec.m_double.enumerate_span(total as usize);
                assert_eq!(prime_elems.len() as u128 * double_elems.len() as u128, total);
            }
        }
    }

    #[test]
    fn tate_orthogonality_split_case() {
        // Split p = 5 over Z[i], dagger swaps the primes. The evaluation
        // pairing on R_1 + R_2 with antidiagonal gram is dagger-adjoint,
        // and the complement of M[p_1] must be M[p_1] itself (since
        // p_1^dagger = p_2).
        let split = SplitRing::from_number_ring(&NumberRing::gaussian(), 5, 1).unwrap();
        let m = component_sum_module(&split, &[1, 1]);
        // Gram [[0,1],[-1,0]]: couples the two components.
        let p = Pairing::new(m, 1, &[vec![0, 1], vec![-1, 0]]).unwrap();
        assert!(p.check_axiom(Axiom::DaggerAdjoint).is_ok());
        let report = p.tate_orthogonality().unwrap();
        assert!(report.all_hold());

        // Diagonal gram fails dagger-adjointness in the split-swap case.
        let m3 = component_sum_module(&split, &[1, 1]);
        let p3 = Pairing::new(m3, 1, &[vec![1, 0], vec![0, 1]]).unwrap();
        assert!(p3.check_axiom(Axiom::DaggerAdjoint).is_err());
    }

    #[test]
    fn isotropic_line_is_self_complementary() {
        // In the hyperbolic plane over F_3, the complement of the isotropic
        // line through e_1 is that same line.
        let split = SplitRing::from_local_polynomial(3, 1, &IntPoly::x()).unwrap();
        let p = build::hyperbolic_balanced(&split, &[1]);
        let line = ResidueMatrix::from_rows(p.domain().ctx(), &[vec![1, 0]]);
        let complement = p.orthogonal_complement(&line);
        assert_eq!(complement, line.howell_form());
        // |sub| * |complement| = |M| for nondegenerate pairings.
        assert_eq!(line.span_size() * complement.span_size(), p.domain().size());
    }

    #[test]
    fn inert_complement_of_everything_is_zero() {
        let split = SplitRing::from_number_ring(&NumberRing::gaussian(), 3, 1).unwrap();
        let m = component_sum_module(&split, &[1]);
        let p = Pairing::new(m, 1, &[vec![0, 1], vec![-1, 0]]).unwrap();
        let full = p.domain().full_gens();
        let complement = p.orthogonal_complement(&full);
        assert_eq!(complement.rows(), 0);
        let zero = p.domain().empty_gens();
        assert_eq!(p.orthogonal_complement(&zero).span_size(), p.domain().size());
        // Single inert prime: the complement of the whole prime-torsion is
        // the empty sum over the other primes.
        assert!(p.check_axiom(Axiom::DaggerAdjoint).is_ok());
        assert!(p.tate_orthogonality().unwrap().all_hold());
    }

    #[test]
    fn twist_refused_without_c_compatibility() {
        // c present but the gram is not c-compatible: the twist must refuse
        // with the named axiom rather than producing a wrong pairing.
        let split = SplitRing::from_number_ring(&NumberRing::gaussian(), 5, 1).unwrap();
        let m = component_sum_module(&split, &[1, 1]);
        // Swap is a semilinear involution for the split-swap dagger.
        let c = vec![vec![0i64, 1], vec![1, 0]];
        let c_emb = m.embed_operator(&c).unwrap();
        let m = m.with_act_c(c_emb);
        // Antidiagonal is dagger-adjoint; breaking one entry's sign keeps
        // adjointness but not c-compatibility.
        let p = Pairing::new(m, 1, &[vec![0, 2], vec![3, 0]]).unwrap();
        assert!(p.check_axiom(Axiom::DaggerAdjoint).is_ok());
        match p.twist_by_c() {
            Err(PairingError::AxiomFailed(Axiom::CCompatible, _)) => {}
            other => panic!("expected c-compatibility refusal, got {other:?}"),
        }
    }

    #[test]
    fn zero_module_certificate_is_empty() {
        let split = SplitRing::from_number_ring(&NumberRing::gaussian(), 5, 1).unwrap();
        let m = FiniteModule::new(BaseRing::Split(split), vec![], &[], None, None).unwrap();
        let c = crate::linalg::ResidueMatrix::identity(m.ctx(), 0);
        let m = m.with_act_c(c);
        let p = Pairing::new(m, 1, &[]).unwrap();
        let (layers, dec) = p.evenness_certificate().unwrap();
        assert_eq!(layers, RankVector(vec![0, 0]));
        assert_eq!(dec.num_pairs(), 0);
    }

    #[test]
    fn twist_by_c_identity_case() {
        // c = identity with trivial dagger: twisting changes nothing.
        let split = SplitRing::from_local_polynomial(3, 1, &IntPoly::x()).unwrap();
        let base = BaseRing::Split(split);
        let m = FiniteModule::new(
            base,
            vec![1, 1],
            &[vec![0, 0], vec![0, 0]],
            None,
            Some(&[vec![1, 0], vec![0, 1]]),
        )
        .unwrap();
        let p = Pairing::new(m, 1, &[vec![0, 1], vec![-1, 0]]).unwrap();
        let twisted = p.twist_by_c().unwrap();
        assert_eq!(twisted.gram(), p.gram());
        // Twisting twice with c^2 = identity returns the original gram.
        let twice = twisted.twist_by_c().unwrap();
        assert_eq!(twice.gram(), p.gram());
    }

    #[test]
    fn twist_requires_c_map() {
        let split = SplitRing::from_local_polynomial(3, 1, &IntPoly::x()).unwrap();
        let base = BaseRing::Split(split);
        let m = FiniteModule::new(base, vec![1], &[vec![0]], None, None).unwrap();
        let p = Pairing::new(m, 1, &[vec![0]]).unwrap();
        assert!(matches!(p.twist_by_c(), Err(PairingError::MissingCMap)));
    }

    #[test]
    fn hermitian_twist_form_augmentation_ideal() {
        // p = 3, n = 1: the augmentation ideal of Z[Z/3] has basis
        // gamma - 1, gamma^2 - 1; all f-values are integral and Hermitian.
        let ring = CyclotomicRing::new(3, 1).unwrap();
        let rows = vec![
            vec![BigInt::from(-1), BigInt::from(1), BigInt::from(0)],
            vec![BigInt::from(-1), BigInt::from(0), BigInt::from(1)],
        ];
        let h = twist_pairing_f(&ring, &rows).unwrap();
        assert!(h.is_perfect());
        // Zero entries stay zero: f(0, 0) = 0 — trivially via empty basis.
        let empty = twist_pairing_f(&ring, &[]).unwrap();
        assert!(empty.gram().is_empty());
        assert!(!empty.is_perfect());
    }

    #[test]
    fn hermitian_twist_form_level_nine() {
        // Degree-9 quotient: the twist lattice maps into Z[zeta_9], where
        // products a * iota(b) are divisible by pi^6; Hermitian symmetry is
        // exact polynomial arithmetic mod the ninth cyclotomic polynomial.
        let g = crate::twist::AbelianGroup::cyclic(9).unwrap();
        let q = crate::twist::cyclic_quotients(&g).into_iter().find(|q| q.degree() == 9).unwrap();
        let ideal = crate::twist::twist_ideal(&g, &q).unwrap();
        let ring = ideal.ring().unwrap().clone();
        let rows: Vec<Vec<BigInt>> =
            (0..ideal.rank()).map(|r| ideal.basis().row(r).to_vec()).collect();
        let h = twist_pairing_f(&ring, &rows).unwrap();
        assert_eq!(h.gram().len(), 6);
        assert!(h.is_perfect());
    }

    #[test]
    fn semilinear_transfer_to_adjoint() {
        // W = F_3[zeta]/(Phi_3) as a module over itself, with the semilinear
        // form (a, b) -> a * iota(b). tau = coefficient-of-1 transfers it to
        // an iota-adjoint scalar pairing.
        let cyc = CyclotomicRing::new(3, 1).unwrap();
        let split = crate::ring::SplitRing::from_local_polynomial(
            3,
            1,
            &crate::poly::IntPoly::x(),
        )
        .unwrap();
        let base = BaseRing::TensorCyclotomic { split, cyclotomic: cyc.clone() };
        // zeta acts by the companion matrix of Phi_3; the order generator
        // acts as zero (the coefficient ring is Z).
        let act_x = vec![vec![0i64, 0], vec![0, 0]];
        let act_zeta = vec![vec![0i64, 1], vec![-1, -1]];
        let module = FiniteModule::new(base, vec![1, 1], &act_x, Some(&act_zeta), None).unwrap();
        // Gram entries zeta^(k) * iota(zeta^(l)) in F_3[zeta]/(Phi_3).
        let q = 3;
        let gram = vec![
            vec![ModPoly::from_signed(q, &[1]), ModPoly::from_signed(q, &[-1, -1])],
            vec![ModPoly::from_signed(q, &[0, 1]), ModPoly::from_signed(q, &[1])],
        ];
        let semi = SemilinearPairing::new(module.clone(), cyc.clone(), 1, gram).unwrap();
        assert_eq!(semi.radical().rows(), 0);
        let tau = vec![1u64, 0];
        let transferred = semi.transfer_by_tau(&tau, true).unwrap();
        assert!(transferred.is_nondegenerate());

        // The zero semilinear pairing transfers to the zero pairing.
        let zero_gram = vec![vec![ModPoly::zero(q); 2]; 2];
        let zero = SemilinearPairing::new(module.clone(), cyc.clone(), 1, zero_gram).unwrap();
        let z = zero.transfer_by_tau(&tau, false).unwrap();
        assert!(z.gram().is_zero());

        // Perturbing one entry breaks semilinearity with a witness.
        let bad_gram = vec![
            vec![ModPoly::from_signed(q, &[1]), ModPoly::from_signed(q, &[-1, -1])],
            vec![ModPoly::from_signed(q, &[0, 1]), ModPoly::from_signed(q, &[2])],
        ];
        let err = SemilinearPairing::new(module, cyc, 1, bad_gram).unwrap_err();
        assert!(matches!(err, PairingError::NotSemilinear(_)));
        assert!(err.to_string().contains("witness"));
    }

    #[test]
    fn tensor_cyclotomic_decomposition() {
        // A = (O/3) (x) (Z[zeta_3]/3) with O the Gaussian order inert at 3:
        // a local ring with residue field F_9 and maximal ideal generated by
        // the action of zeta - zeta^{-1}. The hyperbolic module A u + A w
        // with the product form through the top-coefficient functional
        // decomposes into one pair; the p-layer count is even.
        let split = crate::ring::SplitRing::from_number_ring(&NumberRing::gaussian(), 3, 1)
            .unwrap();
        let cyc = CyclotomicRing::new(3, 1).unwrap();
        let base = BaseRing::TensorCyclotomic { split, cyclotomic: cyc };
        // Basis of A: x^i zeta^j, i < 2, j < 2, index 2*j + i; two copies.
        // x^2 = -1, zeta^2 = -1 - zeta.
        let mul_x = |i: usize, j: usize| -> Vec<i64> {
            // x * x^i zeta^j
            let mut v = vec![0i64; 4];
            if i == 0 {
                v[2 * j + 1] = 1;
            } else {
                v[2 * j] = -1;
            }
            v
        };
        let mul_zeta = |i: usize, j: usize| -> Vec<i64> {
            // zeta * x^i zeta^j
            let mut v = vec![0i64; 4];
            if j == 0 {
                v[2 + i] = 1;
            } else {
                v[i] = -1;
                v[2 + i] = -1;
            }
            v
        };
        let dim = 8;
        let mut act_x = vec![vec![0i64; dim]; dim];
        let mut act_z = vec![vec![0i64; dim]; dim];
        for copy in 0..2 {
            for j in 0..2 {
                for i in 0..2 {
                    let row = 4 * copy + 2 * j + i;
                    for (col, &v) in mul_x(i, j).iter().enumerate() {
                        act_x[row][4 * copy + col] = v;
                    }
                    for (col, &v) in mul_zeta(i, j).iter().enumerate() {
                        act_z[row][4 * copy + col] = v;
                    }
                }
            }
        }
        let module =
            FiniteModule::new(base, vec![1; dim], &act_x, Some(&act_z), None).unwrap();
        assert_eq!(module.components().len(), 1);
        // Product of basis monomials reduced in A, top coefficient (of
        // x zeta) as the coupling functional.
        let reduce = |i: usize, j: usize| -> [[i64; 2]; 2] {
            // x^i zeta^j with i < 4, j < 4 reduced; returns coefficient grid.
            let mut grid = [[0i64; 2]; 2];
            let (coeff, i) = if i >= 2 { (-1i64, i - 2) } else { (1, i) };
            // zeta^j: j = 0,1 direct; zeta^2 = -1-zeta; zeta^3 = 1.
            match j {
                0 | 1 => grid[i][j] = coeff,
                2 => {
                    grid[i][0] = -coeff;
                    grid[i][1] = -coeff;
                }
                3 => grid[i][0] = coeff,
                _ => unreachable!(),
            }
            grid
        };
        let lambda = |i1: usize, j1: usize, i2: usize, j2: usize| -> i64 {
            reduce(i1 + i2, j1 + j2)[1][1]
        };
        let mut gram = vec![vec![0i64; dim]; dim];
        for j1 in 0..2 {
            for i1 in 0..2 {
                for j2 in 0..2 {
                    for i2 in 0..2 {
                        let a = 2 * j1 + i1;
                        let b = 2 * j2 + i2;
                        let v = lambda(i1, j1, i2, j2);
                        gram[a][4 + b] = v;
                        gram[4 + a][b] = -v;
                    }
                }
            }
        }
        let pairing = Pairing::new(module, 1, &gram).unwrap();
        let report = pairing.check_axioms(&[
            Axiom::Nondegenerate,
            Axiom::SkewSymmetric,
            Axiom::Balanced,
        ]);
        assert!(report.all_hold(), "{report}");
        let dec = pairing.hyperbolic_decompose().unwrap();
        assert_eq!(dec.layer_ranks, RankVector(vec![2]));
        // The paired elements have full pi-order 2 (pi is nilpotent of
        // order 2 on A here).
        assert!(dec.pairs.iter().all(|p| p.order_exp == 2));
    }

    #[test]
    fn hermitian_twist_rejects_non_ideal_lattice() {
        // The full group ring Z[Z/3] (containing 1) has f(1,1) = pi^{-2},
        // which is not integral.
        let ring = CyclotomicRing::new(3, 1).unwrap();
        let rows = vec![
            vec![BigInt::from(1), BigInt::from(0), BigInt::from(0)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(0)],
        ];
        assert!(matches!(twist_pairing_f(&ring, &rows), Err(PairingError::NonIntegralValue)));
    }
}
