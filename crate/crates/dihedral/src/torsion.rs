//! Finite modules over products of local rings, and the rank-vector calculus.
//!
//! A module is presented by the p-power orders of its cyclic generators plus
//! one action matrix per ring generator. Internally every element is embedded
//! into `(Z/p^E)^r` with `E = max(orders)`: the generator of order `p^e` sits
//! at `p^(E-e)` times a basis vector, so submodule arithmetic is uniform
//! Howell-form linear algebra regardless of mixed orders. Action matrices are
//! stored in embedded coordinates; the natural (order-relative) form appears
//! only at construction and serialization boundaries.

use crate::linalg::{span_intersection, ResidueMatrix, Zpe};
use crate::poly::ModPoly;
use crate::ring::{CyclotomicRing, SplitRing};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModuleError {
    EmptyOrder,
    OrderExceedsRing { order_exp: u32, ring_exp: u32 },
    ActionShape,
    ActionNotWellDefined { row: usize, col: usize },
    ActionNotAnnihilated(String),
    ActionsDoNotCommute,
    NotPTorsion,
    RankNotDivisible { component: usize, dim: usize, degree: usize },
    MapNotLinear,
    MapNotInjective,
    SubmoduleNotStable,
    BaseMismatch,
    OddShaLayer(RankVector),
    CertificateMismatch,
    MissingDagger,
}

impl fmt::Display for ModuleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModuleError::EmptyOrder => write!(f, "cyclic orders must be >= p"),
            ModuleError::OrderExceedsRing { order_exp, ring_exp } => {
                write!(f, "cyclic order p^{order_exp} exceeds the ring level p^{ring_exp}")
            }
            ModuleError::ActionShape => write!(f, "action matrix shape does not match the orders"),
            ModuleError::ActionNotWellDefined { row, col } => write!(
                f,
                "action entry ({row},{col}) does not satisfy the divisibility a generator of \
                 smaller order requires"
            ),
            ModuleError::ActionNotAnnihilated(which) => {
                write!(f, "defining polynomial {which} does not annihilate the action")
            }
            ModuleError::ActionsDoNotCommute => write!(f, "action matrices do not commute"),
            ModuleError::NotPTorsion => write!(f, "operation requires a p-torsion module"),
            ModuleError::RankNotDivisible { component, dim, degree } => write!(
                f,
                "component {component}: F_p-dimension {dim} is not divisible by the residue \
                 degree {degree}; the action is not semilinear over that component"
            ),
            ModuleError::MapNotLinear => write!(f, "supplied map is not linear over the ring"),
            ModuleError::MapNotInjective => write!(f, "supplied map is not injective"),
            ModuleError::SubmoduleNotStable => {
                write!(f, "generators do not span an action-stable submodule")
            }
            ModuleError::BaseMismatch => write!(f, "modules live over different base rings"),
            ModuleError::OddShaLayer(rk) => write!(
                f,
                "finite part has odd p-layer rank {rk:?} and no pairing justification; no \
                 nondegenerate compatible pairing can exist"
            ),
            ModuleError::CertificateMismatch => {
                write!(f, "evenness certificate does not match the computed p-layer rank")
            }
            ModuleError::MissingDagger => write!(f, "base ring carries no involution"),
        }
    }
}

impl std::error::Error for ModuleError {}

// ---------------------------------------------------------------------------
// Rank vectors
// ---------------------------------------------------------------------------

/// Tuple of non-negative integers, one per prime of `O` above `p` (in the
/// fixed factor order of the split data).
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankVector(pub Vec<usize>);

/// Corank tuple with the same indexing; a separate type because coranks of
/// divisible groups and ranks of finite layers are different bookkeeping.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorankVector(pub Vec<usize>);

impl fmt::Debug for RankVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rk{:?}", self.0)
    }
}

impl fmt::Debug for CorankVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "crk{:?}", self.0)
    }
}

impl RankVector {
    pub fn zeros(m: usize) -> Self {
        RankVector(vec![0; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &RankVector) -> RankVector {
        assert_eq!(self.0.len(), other.0.len());
        RankVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Entry-wise `self - other`; panics when not dominating.
    pub fn sub(&self, other: &RankVector) -> RankVector {
        assert_eq!(self.0.len(), other.0.len());
        RankVector(self.0.iter().zip(&other.0).map(|(a, b)| a.checked_sub(*b).unwrap()).collect())
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|a| a % 2 == 0)
    }

    pub fn permute(&self, perm: &[usize]) -> RankVector {
        assert_eq!(perm.len(), self.0.len());
        let mut out = vec![0; self.0.len()];
        for (i, &j) in perm.iter().enumerate() {
            out[j] = self.0[i];
        }
        RankVector(out)
    }

    /// Component-wise parity of `self - other` (difference taken in `Z`).
    pub fn parity_diff(&self, other: &RankVector) -> Vec<u8> {
        assert_eq!(self.0.len(), other.0.len());
        self.0.iter().zip(&other.0).map(|(a, b)| (((*a as i64) - (*b as i64)).rem_euclid(2)) as u8).collect()
    }
}

// ---------------------------------------------------------------------------
// Base rings and components
// ---------------------------------------------------------------------------

/// The acting ring of a module: a split quotient `O/p^e O`, or the mod-`p^e`
/// layer of `O (x) R_L` for a cyclotomic twist ring (totally ramified, so the
/// component count and residue degrees come from the `O` side while the
/// maximal ideal is generated by `zeta - zeta^{-1}`).
#[derive(Debug, Clone, PartialEq)]
pub enum BaseRing {
    Split(SplitRing),
    TensorCyclotomic { split: SplitRing, cyclotomic: CyclotomicRing },
}

impl BaseRing {
    pub fn split(&self) -> &SplitRing {
        match self {
            BaseRing::Split(s) => s,
            BaseRing::TensorCyclotomic { split, .. } => split,
        }
    }

    pub fn p(&self) -> u64 {
        self.split().p()
    }

    pub fn level(&self) -> u32 {
        self.split().e()
    }

    pub fn num_components(&self) -> usize {
        self.split().num_components()
    }

    pub fn residue_degree(&self, i: usize) -> usize {
        self.split().residue_degree(i)
    }
}

/// Per-component operators of a concrete module: the idempotent projection
/// onto the component and the action of a generator of the component's
/// maximal ideal.
#[derive(Debug, Clone)]
pub struct ModuleComponent {
    pub index: usize,
    pub residue_degree: usize,
    /// Projection of the module onto this component (embedded coordinates).
    pub projector: ResidueMatrix,
    /// Action of the maximal-ideal generator: multiplication by `p` over a
    /// split base, by `zeta - zeta^{-1}` over a tensor-cyclotomic base.
    pub pi_op: ResidueMatrix,
}

// ---------------------------------------------------------------------------
// FiniteModule
// ---------------------------------------------------------------------------

/// Finite module over a [`BaseRing`], presented by cyclic p-power orders and
/// action matrices, stored in embedded coordinates mod `p^E`.
#[derive(Debug, Clone)]
pub struct FiniteModule {
    base: BaseRing,
    orders: Vec<u32>,
    ctx: Zpe,
    act_x: ResidueMatrix,
    act_zeta: Option<ResidueMatrix>,
    act_c: Option<ResidueMatrix>,
}

/// Serialized form: orders as actual p-powers, actions in natural
/// (order-relative) coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModuleLiteral {
    pub orders: Vec<u64>,
    pub action_x: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_zeta: Option<Vec<Vec<i64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_c: Option<Vec<Vec<i64>>>,
}

impl FiniteModule {
    /// Build and validate a module from natural-coordinate data. `orders`
    /// are exponents: generator `k` has order `p^orders[k]`.
    pub fn new(
        base: BaseRing,
        orders: Vec<u32>,
        act_x: &[Vec<i64>],
        act_zeta: Option<&[Vec<i64>]>,
        act_c: Option<&[Vec<i64>]>,
    ) -> Result<FiniteModule, ModuleError> {
        let p = base.p();
        if orders.iter().any(|&e| e == 0) {
            return Err(ModuleError::EmptyOrder);
        }
        for &e in &orders {
            if e > base.level() {
                return Err(ModuleError::OrderExceedsRing { order_exp: e, ring_exp: base.level() });
            }
        }
        let big_e = orders.iter().copied().max().unwrap_or(1);
        let ctx = Zpe::new(p, big_e);
        let embed = |a: &[Vec<i64>]| -> Result<ResidueMatrix, ModuleError> {
            embed_action(ctx, &orders, a)
        };
        let act_x = embed(act_x)?;
        let act_zeta = match (&base, act_zeta) {
            (BaseRing::TensorCyclotomic { .. }, Some(a)) => Some(embed(a)?),
            (BaseRing::TensorCyclotomic { .. }, None) => {
                return Err(ModuleError::ActionShape);
            }
            (BaseRing::Split(_), Some(_)) => return Err(ModuleError::ActionShape),
            (BaseRing::Split(_), None) => None,
        };
        let act_c = match act_c {
            Some(a) => Some(embed(a)?),
            None => None,
        };
        let m = FiniteModule { base, orders, ctx, act_x, act_zeta, act_c };
        m.validate()?;
        Ok(m)
    }

    /// Embed a natural-coordinate operator (any well-defined endomorphism,
    /// not necessarily an algebra element) into the module's coordinates.
    pub fn embed_operator(&self, natural: &[Vec<i64>]) -> Result<ResidueMatrix, ModuleError> {
        embed_action(self.ctx, &self.orders, natural)
    }

    fn validate(&self) -> Result<(), ModuleError> {
        let q = self.ctx.modulus();
        let split = self.base.split();
        // The ring's defining polynomial annihilates the x-action.
        let fq = split.modulus_poly().reduce_to(q);
        if !self.is_zero_operator(&fq.eval_matrix(&self.act_x)) {
            return Err(ModuleError::ActionNotAnnihilated("of the order".into()));
        }
        if let (BaseRing::TensorCyclotomic { cyclotomic, .. }, Some(az)) =
            (&self.base, &self.act_zeta)
        {
            let phi_q = cyclotomic.phi_poly().reduce_mod(q);
            if !self.is_zero_operator(&phi_q.eval_matrix(az)) {
                return Err(ModuleError::ActionNotAnnihilated("of the twist ring".into()));
            }
            if !self.operators_commute(&self.act_x, az) {
                return Err(ModuleError::ActionsDoNotCommute);
            }
        }
        Ok(())
    }

    fn is_zero_operator(&self, op: &ResidueMatrix) -> bool {
        // Embedded generator k is p^(E - e_k) * delta_k; the operator is zero
        // on the module iff it kills every embedded generator.
        let q = self.ctx.modulus();
        for k in 0..self.orders.len() {
            let scale = self.ctx.p_power(self.ctx.e() - self.orders[k]);
            for l in 0..self.orders.len() {
                if (op[(k, l)] as u128 * scale as u128) % q as u128 != 0 {
                    return false;
                }
            }
        }
        true
    }

    fn operators_commute(&self, a: &ResidueMatrix, b: &ResidueMatrix) -> bool {
        let d = a.mul(b).sub(&b.mul(a));
        self.is_zero_operator(&d)
    }

    pub fn base(&self) -> &BaseRing {
        &self.base
    }

    pub fn p(&self) -> u64 {
        self.base.p()
    }

    pub fn ctx(&self) -> Zpe {
        self.ctx
    }

    pub fn num_generators(&self) -> usize {
        self.orders.len()
    }

    /// Order exponents of the cyclic generators.
    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn act_x(&self) -> &ResidueMatrix {
        &self.act_x
    }

    pub fn act_zeta(&self) -> Option<&ResidueMatrix> {
        self.act_zeta.as_ref()
    }

    pub fn act_c(&self) -> Option<&ResidueMatrix> {
        self.act_c.as_ref()
    }

    pub fn with_act_c(mut self, act_c: ResidueMatrix) -> FiniteModule {
        self.act_c = Some(act_c);
        self
    }

    pub fn size(&self) -> u128 {
        self.orders.iter().map(|&e| (self.p() as u128).pow(e)).product()
    }

    pub fn is_p_torsion(&self) -> bool {
        self.orders.iter().all(|&e| e == 1)
    }

    pub fn is_zero(&self) -> bool {
        self.orders.is_empty()
    }

    // -- embedding helpers ---------------------------------------------------

    pub fn embed_element(&self, natural: &[u64]) -> Vec<u64> {
        assert_eq!(natural.len(), self.orders.len());
        natural
            .iter()
            .zip(&self.orders)
            .map(|(&x, &e)| {
                self.ctx.mul(x % self.ctx.p_power(e), self.ctx.p_power(self.ctx.e() - e))
            })
            .collect()
    }

    pub fn unembed_element(&self, embedded: &[u64]) -> Vec<u64> {
        assert_eq!(embedded.len(), self.orders.len());
        embedded
            .iter()
            .zip(&self.orders)
            .map(|(&x, &e)| {
                let scale = self.ctx.p_power(self.ctx.e() - e);
                debug_assert_eq!(x % scale, 0, "element is outside the embedded lattice");
                (x / scale) % self.ctx.p_power(e)
            })
            .collect()
    }

    /// Generators of the whole module in embedded coordinates: the diagonal
    /// matrix with `p^(E - e_k)` entries, in Howell form.
    pub fn full_gens(&self) -> ResidueMatrix {
        let r = self.orders.len();
        let mut m = ResidueMatrix::zero(self.ctx, r, r);
        for k in 0..r {
            m.set(k, k, self.ctx.p_power(self.ctx.e() - self.orders[k]));
        }
        m
    }

    pub fn empty_gens(&self) -> ResidueMatrix {
        ResidueMatrix::empty(self.ctx, self.orders.len())
    }

    /// Order exponent of an embedded element: smallest `t` with `p^t x = 0`.
    pub fn element_order_exp(&self, x: &[u64]) -> u32 {
        let e = self.ctx.e();
        x.iter().map(|&v| e - self.ctx.val(v)).max().unwrap_or(0)
    }

    // -- submodule machinery --------------------------------------------------

    /// Kernel of an operator (embedded matrix) as a submodule: Howell
    /// generators, embedded, guaranteed inside the lattice.
    pub fn operator_kernel(&self, op: &ResidueMatrix) -> ResidueMatrix {
        let raw = op.kernel();
        span_intersection(&raw, &self.full_gens())
    }

    /// Image of a set of embedded generators under an operator.
    pub fn operator_image(&self, gens: &ResidueMatrix, op: &ResidueMatrix) -> ResidueMatrix {
        gens.mul(op).howell_form()
    }

    /// The multiplication-by-`p^k` operator.
    pub fn mul_p_op(&self, k: u32) -> ResidueMatrix {
        ResidueMatrix::identity(self.ctx, self.orders.len())
            .scalar_mul(self.ctx.p_power(k.min(self.ctx.e())))
    }

    /// Generators of `M[p]`, the p-torsion layer.
    pub fn p_layer(&self) -> ResidueMatrix {
        self.operator_kernel(&self.mul_p_op(1))
    }

    pub fn submodule_size(&self, gens: &ResidueMatrix) -> u128 {
        gens.howell_form().span_size()
    }

    /// Evaluate a polynomial of the ring generator on the module.
    pub fn poly_of_x(&self, poly: &ModPoly) -> ResidueMatrix {
        poly.reduce_to(self.ctx.modulus()).eval_matrix(&self.act_x)
    }

    /// Whether a set of embedded generators is stable under every action.
    pub fn is_action_stable(&self, gens: &ResidueMatrix) -> bool {
        let h = gens.howell_form();
        if h.rows() == 0 {
            return true;
        }
        let mut ops: Vec<&ResidueMatrix> = vec![&self.act_x];
        if let Some(z) = &self.act_zeta {
            ops.push(z);
        }
        for op in ops {
            let image = h.mul(op);
            for r in 0..image.rows() {
                if !h.span_contains(image.row(r)) {
                    return false;
                }
            }
        }
        true
    }

    /// Component data: idempotent projectors and maximal-ideal operators.
    pub fn components(&self) -> Vec<ModuleComponent> {
        let split = self.base.split();
        let q = self.ctx.modulus();
        let pi_op_global = match (&self.base, &self.act_zeta) {
            (BaseRing::TensorCyclotomic { cyclotomic, .. }, Some(az)) => {
                // zeta - zeta^{-1}: zeta^{-1} = zeta^{p^n - 1}.
                let mut inv = az.clone();
                let mut acc = ResidueMatrix::identity(self.ctx, az.rows());
                let mut k = cyclotomic.pn() - 1;
                while k > 0 {
                    if k & 1 == 1 {
                        acc = acc.mul(&inv);
                    }
                    inv = inv.mul(&inv);
                    k >>= 1;
                }
                az.sub(&acc)
            }
            _ => self.mul_p_op(1),
        };
        (0..split.num_components())
            .map(|i| {
                let eps = split.idempotent(i).reduce_to(q);
                ModuleComponent {
                    index: i,
                    residue_degree: split.residue_degree(i),
                    projector: eps.eval_matrix(&self.act_x),
                    pi_op: pi_op_global.clone(),
                }
            })
            .collect()
    }

    /// Span of the full operator algebra applied to one embedded element:
    /// the submodule the base ring generates from it.
    pub fn algebra_span(&self, x: &[u64]) -> ResidueMatrix {
        let mut rows: Vec<Vec<u64>> = Vec::new();
        let deg_f = self.base.split().modulus_poly().degree().unwrap_or(1).max(1);
        let mut powers_x: Vec<Vec<u64>> = vec![x.to_vec()];
        for _ in 1..deg_f {
            let prev = powers_x.last().unwrap();
            powers_x.push(self.act_x.apply_row(prev));
        }
        match &self.act_zeta {
            None => rows.extend(powers_x),
            Some(az) => {
                let phi = match &self.base {
                    BaseRing::TensorCyclotomic { cyclotomic, .. } => cyclotomic.degree(),
                    _ => 1,
                };
                for base_row in &powers_x {
                    let mut cur = base_row.clone();
                    for _ in 0..phi {
                        rows.push(cur.clone());
                        cur = az.apply_row(&cur);
                    }
                }
            }
        }
        ResidueMatrix::from_rows(self.ctx, &rows).howell_form()
    }

    // -- rank calculus ---------------------------------------------------------

    /// Rank vector of a p-torsion module: entry `i` is
    /// `dim_{R_i} M[prime_i]`, computed as the kernel of the `g_i`-action
    /// divided by the residue degree.
    pub fn rank_vector(&self) -> Result<RankVector, ModuleError> {
        if !self.is_p_torsion() {
            return Err(ModuleError::NotPTorsion);
        }
        self.rank_vector_of(&self.full_gens())
    }

    /// Rank vector of a p-torsion submodule given by embedded generators.
    pub fn rank_vector_of(&self, gens: &ResidueMatrix) -> Result<RankVector, ModuleError> {
        let h = gens.howell_form();
        // Every generator must be killed by p.
        for r in 0..h.rows() {
            let killed = h.row(r).iter().all(|&v| self.ctx.mul(v, self.p()) == 0);
            if !killed {
                return Err(ModuleError::NotPTorsion);
            }
        }
        let split = self.base.split();
        let p = self.p();
        let mut entries = Vec::with_capacity(split.num_components());
        for i in 0..split.num_components() {
            let gi = split.split().factor(i).reduce_to(self.ctx.modulus());
            let op = gi.eval_matrix(&self.act_x);
            let ker = self.operator_kernel(&op);
            let torsion_part = span_intersection(&ker, &h);
            let size = torsion_part.span_size();
            let mut dim = 0usize;
            let mut s = size;
            while s > 1 {
                debug_assert_eq!(s % p as u128, 0);
                s /= p as u128;
                dim += 1;
            }
            let d = split.residue_degree(i);
            if dim % d != 0 {
                return Err(ModuleError::RankNotDivisible { component: i, dim, degree: d });
            }
            entries.push(dim / d);
        }
        Ok(RankVector(entries))
    }

    // -- functors ---------------------------------------------------------------

    /// The module with twisted ring action `r * m := dagger(r) m`: the
    /// x-action matrix is replaced by the involution image evaluated at it.
    pub fn dagger_module(&self) -> Result<FiniteModule, ModuleError> {
        let split = self.base.split();
        let dagger = split.dagger_poly().ok_or(ModuleError::MissingDagger)?;
        let new_act = dagger.reduce_to(self.ctx.modulus()).eval_matrix(&self.act_x);
        Ok(FiniteModule {
            base: self.base.clone(),
            orders: self.orders.clone(),
            ctx: self.ctx,
            act_x: new_act,
            act_zeta: self.act_zeta.clone(),
            act_c: self.act_c.clone(),
        })
    }

    /// `Hom(M^dagger, F_p)^dagger` for a p-torsion module: same underlying
    /// group, x-action transposed. Its rank vector equals the original's.
    pub fn hom_dual(&self) -> Result<FiniteModule, ModuleError> {
        if !self.is_p_torsion() {
            return Err(ModuleError::NotPTorsion);
        }
        Ok(FiniteModule {
            base: self.base.clone(),
            orders: self.orders.clone(),
            ctx: self.ctx,
            act_x: self.act_x.transpose(),
            act_zeta: self.act_zeta.as_ref().map(|m| m.transpose()),
            act_c: None,
        })
    }

    /// Direct sum with block-diagonal actions. Bases must agree.
    pub fn direct_sum(&self, other: &FiniteModule) -> Result<FiniteModule, ModuleError> {
        if self.base != other.base {
            return Err(ModuleError::BaseMismatch);
        }
        let mut orders = self.orders.clone();
        orders.extend_from_slice(&other.orders);
        let big_e = orders.iter().copied().max().unwrap_or(1);
        let ctx = Zpe::new(self.p(), big_e);
        let lift = |m: &FiniteModule, mat: &ResidueMatrix| -> ResidueMatrix {
            // Re-embed a module's action at the joint exponent.
            re_embed_action(mat, &m.orders, m.ctx, ctx)
        };
        let block = |a: Option<&ResidueMatrix>, b: Option<&ResidueMatrix>| match (a, b) {
            (Some(a), Some(b)) => {
                Some(block_diag(ctx, &lift(self, a), &lift(other, b)))
            }
            (None, None) => None,
            _ => None,
        };
        let act_x = block_diag(ctx, &lift(self, &self.act_x), &lift(other, &other.act_x));
        let act_zeta = block(self.act_zeta.as_ref(), other.act_zeta.as_ref());
        let act_c = block(self.act_c.as_ref(), other.act_c.as_ref());
        Ok(FiniteModule { base: self.base.clone(), orders, ctx, act_x, act_zeta, act_c })
    }

    /// Quotient of a p-torsion module by an action-stable submodule. Returns
    /// the quotient module and the projection matrix (embedded coordinates:
    /// rows index generators of `self`, columns the quotient generators).
    pub fn quotient(
        &self,
        sub_gens: &ResidueMatrix,
    ) -> Result<(FiniteModule, ResidueMatrix), ModuleError> {
        if !self.is_p_torsion() {
            return Err(ModuleError::NotPTorsion);
        }
        let h = sub_gens.howell_form();
        if !self.is_action_stable(&h) {
            return Err(ModuleError::SubmoduleNotStable);
        }
        let r = self.orders.len();
        // Echelon over F_p: pivot columns of h.
        let pivot_cols: Vec<usize> = (0..h.rows())
            .map(|i| (0..r).find(|&c| h[(i, c)] != 0).expect("zero row in Howell form"))
            .collect();
        let free_cols: Vec<usize> = (0..r).filter(|c| !pivot_cols.contains(c)).collect();
        let reduce = |v: &[u64]| -> Vec<u64> {
            // Subtract multiples of h's rows to clear pivot columns.
            let mut x = v.to_vec();
            for (i, &pc) in pivot_cols.iter().enumerate() {
                if x[pc] != 0 {
                    let coeff = self.ctx.mul(x[pc], self.ctx.inv(h[(i, pc)]));
                    for c in 0..r {
                        x[c] = self.ctx.sub(x[c], self.ctx.mul(coeff, h[(i, c)]));
                    }
                }
            }
            free_cols.iter().map(|&c| x[c]).collect()
        };
        let mut proj = ResidueMatrix::zero(self.ctx, r, free_cols.len());
        for k in 0..r {
            let mut unit = vec![0u64; r];
            unit[k] = 1;
            let img = reduce(&unit);
            for (j, &v) in img.iter().enumerate() {
                proj.set(k, j, v);
            }
        }
        let induced = |op: &ResidueMatrix| -> ResidueMatrix {
            let mut m = ResidueMatrix::zero(self.ctx, free_cols.len(), free_cols.len());
            for (j, &c) in free_cols.iter().enumerate() {
                let mut unit = vec![0u64; r];
                unit[c] = 1;
                let img = reduce(&op.apply_row(&unit));
                for (l, &v) in img.iter().enumerate() {
                    m.set(j, l, v);
                }
            }
            m
        };
        let quotient = FiniteModule {
            base: self.base.clone(),
            orders: vec![1; free_cols.len()],
            ctx: self.ctx,
            act_x: induced(&self.act_x),
            act_zeta: self.act_zeta.as_ref().map(&induced),
            act_c: self.act_c.as_ref().map(&induced),
        };
        Ok((quotient, proj))
    }

    /// A p-torsion submodule as a module in its own right: action rewritten
    /// in the coordinates of the (independent, since we are over a field)
    /// Howell generators. Returns the module and the inclusion matrix.
    pub fn submodule(
        &self,
        gens: &ResidueMatrix,
    ) -> Result<(FiniteModule, ResidueMatrix), ModuleError> {
        if !self.is_p_torsion() {
            return Err(ModuleError::NotPTorsion);
        }
        let h = gens.howell_form();
        if !self.is_action_stable(&h) {
            return Err(ModuleError::SubmoduleNotStable);
        }
        let rewrite = |op: &ResidueMatrix| -> ResidueMatrix {
            let img = h.mul(op);
            h.solve_linear(&img).expect("stable submodule must absorb its image")
        };
        let module = FiniteModule {
            base: self.base.clone(),
            orders: vec![1; h.rows()],
            ctx: self.ctx,
            act_x: rewrite(&self.act_x),
            act_zeta: self.act_zeta.as_ref().map(&rewrite),
            act_c: self.act_c.as_ref().map(&rewrite),
        };
        Ok((module, h))
    }

    /// Abelian-group invariants (p-power cyclic orders, ascending) of the
    /// submodule spanned by embedded generators.
    pub fn submodule_invariants(&self, gens: &ResidueMatrix) -> Vec<u64> {
        let h = gens.howell_form();
        if h.rows() == 0 {
            return vec![];
        }
        let g = h.rows();
        let q = BigInt::from(self.ctx.modulus());
        // Relations of the generating map Z^g -> S: v with v*G = 0 mod q.
        let mut big_rows: Vec<Vec<BigInt>> = Vec::new();
        for i in 0..g {
            big_rows.push(h.row(i).iter().map(|&x| BigInt::from(x)).collect());
        }
        let gmat = crate::linalg::IntMatrix::from_rows(big_rows);
        let qid = crate::linalg::IntMatrix::identity(h.cols()).scalar_mul(&q);
        let stacked = gmat.vstack(&qid);
        let kernel = stacked.left_kernel();
        // Project kernel rows to the first g coordinates: the relation lattice.
        let rel_rows: Vec<Vec<BigInt>> =
            (0..kernel.rows()).map(|r| kernel.row(r)[..g].to_vec()).collect();
        let rel = crate::linalg::IntMatrix::from_rows(rel_rows);
        let invariants = rel.smith_invariants();
        let mut out: Vec<u64> = invariants
            .iter()
            .filter_map(|d| {
                let v = u64::try_from(d).expect("invariant fits u64");
                if v > 1 {
                    Some(v)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// An operator in natural coordinates, reduced mod `modulus`. Natural
    /// entry `(k, l)` is well defined mod `p^(e_l)`; reducing further is
    /// legitimate wherever the target arithmetic kills `p^(e_l)` multiples
    /// (pairing identities with values killed by the generator orders do).
    pub fn natural_matrix(&self, op: &ResidueMatrix, modulus: u64) -> ResidueMatrix {
        let ctx = Zpe::from_modulus(modulus).expect("prime-power modulus");
        let r = self.orders.len();
        let mut out = ResidueMatrix::zero(ctx, r, r);
        for k in 0..r {
            for l in 0..r {
                let ek = self.orders[k];
                let el = self.orders[l];
                let b = op[(k, l)];
                let v = if el >= ek {
                    self.ctx.mul(b, self.ctx.p_power(el - ek))
                } else {
                    let scale = self.ctx.p_power(ek - el);
                    debug_assert_eq!(b % scale, 0);
                    b / scale
                };
                out.set(k, l, v % self.ctx.p_power(el));
            }
        }
        out
    }

    // -- literals -----------------------------------------------------------------

    pub fn to_literal(&self) -> ModuleLiteral {
        let natural = |m: &ResidueMatrix| -> Vec<Vec<i64>> {
            // Convert embedded action back to natural coordinates:
            // A_nat[k][l] = B[k][l] * p^(e_l - e_k) reduced mod p^(e_l).
            let r = self.orders.len();
            (0..r)
                .map(|k| {
                    (0..r)
                        .map(|l| {
                            let ek = self.orders[k];
                            let el = self.orders[l];
                            let b = m[(k, l)];
                            let v = if el >= ek {
                                self.ctx.mul(b, self.ctx.p_power(el - ek))
                            } else {
                                let scale = self.ctx.p_power(ek - el);
                                debug_assert_eq!(b % scale, 0);
                                b / scale
                            };
                            (v % self.ctx.p_power(el)) as i64
                        })
                        .collect()
                })
                .collect()
        };
        ModuleLiteral {
            orders: self.orders.iter().map(|&e| self.p().pow(e)).collect(),
            action_x: natural(&self.act_x),
            action_zeta: self.act_zeta.as_ref().map(&natural),
            action_c: self.act_c.as_ref().map(&natural),
        }
    }

    pub fn from_literal(base: BaseRing, lit: &ModuleLiteral) -> Result<FiniteModule, ModuleError> {
        let p = base.p();
        let mut orders = Vec::with_capacity(lit.orders.len());
        for &o in &lit.orders {
            let mut e = 0u32;
            let mut v = o;
            while v > 1 && v % p == 0 {
                v /= p;
                e += 1;
            }
            if v != 1 || e == 0 {
                return Err(ModuleError::EmptyOrder);
            }
            orders.push(e);
        }
        FiniteModule::new(
            base,
            orders,
            &lit.action_x,
            lit.action_zeta.as_deref(),
            lit.action_c.as_deref(),
        )
    }
}

// ---------------------------------------------------------------------------
// Embedding helpers
// ---------------------------------------------------------------------------

/// Natural action matrix -> embedded matrix mod `p^E`. Entry `(k, l)` of the
/// natural matrix is taken mod `p^(e_l)`; embedding multiplies by
/// `p^(e_k - e_l)`, which must be integral where `e_l > e_k` (that is exactly
/// the condition for the map to be a well-defined homomorphism).
fn embed_action(
    ctx: Zpe,
    orders: &[u32],
    natural: &[Vec<i64>],
) -> Result<ResidueMatrix, ModuleError> {
    let r = orders.len();
    if natural.len() != r || natural.iter().any(|row| row.len() != r) {
        return Err(ModuleError::ActionShape);
    }
    let mut m = ResidueMatrix::zero(ctx, r, r);
    for k in 0..r {
        for l in 0..r {
            let el = orders[l];
            let ek = orders[k];
            let a = (natural[k][l] as i128).rem_euclid(ctx.p_power(el) as i128) as u64;
            let v = if ek >= el {
                ctx.mul(a, ctx.p_power(ek - el))
            } else {
                let need = ctx.p_power(el - ek);
                if a % need != 0 {
                    return Err(ModuleError::ActionNotWellDefined { row: k, col: l });
                }
                a / need
            };
            m.set(k, l, v);
        }
    }
    Ok(m)
}

/// Re-embed an action matrix at a larger joint exponent (used by direct sums
/// of modules with different maximal orders).
fn re_embed_action(m: &ResidueMatrix, orders: &[u32], old: Zpe, new: Zpe) -> ResidueMatrix {
    if old == new {
        return m.clone();
    }
    assert!(new.e() >= old.e());
    // Embedded entries scale by p^(e_k - e_l) relative to natural ones; that
    // factor is independent of the ambient exponent, so entries carry over
    // unchanged (they are residues mod p^(E_old), lifted mod p^(E_new))
    // except that entries of the natural matrix were reduced mod p^(e_l);
    // reducing mod the new modulus keeps the same hom.
    let mut out = ResidueMatrix::zero(new, m.rows(), m.cols());
    for k in 0..m.rows() {
        for l in 0..m.cols() {
            let _ = orders;
            out.set(k, l, m[(k, l)]);
        }
    }
    out
}

fn block_diag(ctx: Zpe, a: &ResidueMatrix, b: &ResidueMatrix) -> ResidueMatrix {
    let n = a.rows() + b.rows();
    let mut m = ResidueMatrix::zero(ctx, n, n);
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            m.set(r, c, a[(r, c)]);
        }
    }
    for r in 0..b.rows() {
        for c in 0..b.cols() {
            m.set(a.rows() + r, a.cols() + c, b[(r, c)]);
        }
    }
    m
}

// ---------------------------------------------------------------------------
// Exactness and the corank bookkeeping
// ---------------------------------------------------------------------------

/// Check rank additivity over a short exact sequence: `inj` is a natural
/// injection of `sub` into `total`; ranks must satisfy
/// `rk(total) = rk(sub) + rk(total/sub)` with the quotient computed
/// independently.
pub fn check_exact_additivity(
    sub: &FiniteModule,
    total: &FiniteModule,
    inj: &[Vec<i64>],
) -> Result<bool, ModuleError> {
    if sub.base() != total.base() {
        return Err(ModuleError::BaseMismatch);
    }
    if !sub.is_p_torsion() || !total.is_p_torsion() {
        return Err(ModuleError::NotPTorsion);
    }
    let r_sub = sub.num_generators();
    let r_tot = total.num_generators();
    if inj.len() != r_sub || inj.iter().any(|row| row.len() != r_tot) {
        return Err(ModuleError::ActionShape);
    }
    let ctx = total.ctx();
    let m = ResidueMatrix::from_signed_rows(ctx, inj);
    // R-linearity: inj commutes with the x-actions.
    let lhs = sub.act_x().mul(&m);
    let rhs = m.mul(total.act_x());
    if lhs != rhs {
        return Err(ModuleError::MapNotLinear);
    }
    // Injectivity over F_p: trivial kernel.
    if m.kernel().rows() != 0 {
        return Err(ModuleError::MapNotInjective);
    }
    let image = m.howell_form();
    let (quot, _) = total.quotient(&image)?;
    let rk_total = total.rank_vector()?;
    let rk_sub = sub.rank_vector()?;
    let rk_quot = quot.rank_vector()?;
    Ok(rk_total == rk_sub.add(&rk_quot))
}

/// Synthetic arithmetic data for the corank bookkeeping: everything the two
/// descent exact sequences consume.
#[derive(Debug, Clone)]
pub struct ArithmeticData {
    /// Mordell-Weil rank vector (free part), one entry per prime.
    pub mw_rank: CorankVector,
    /// Corank of the divisible part of the Tate-Shafarevich layer.
    pub sha_div_corank: CorankVector,
    /// The finite (non-divisible) Tate-Shafarevich part.
    pub sha_finite: FiniteModule,
    /// The p-torsion of the point group.
    pub torsion: FiniteModule,
}

/// Corank of the limit Selmer group and rank of the p-Selmer layer, derived
/// from the two exact descent sequences, with the congruence
/// `crk = p_rank - rk(torsion) (mod 2)` asserted via evenness of the finite
/// layer `d`. An odd `d` is rejected: no compatible nondegenerate pairing
/// exists, so the data is inconsistent. When a certificate rank vector (from
/// a hyperbolic decomposition of the finite part) is supplied it must match
/// the directly computed `d`.
pub fn corank_from_arithmetic(
    data: &ArithmeticData,
    evenness_certificate: Option<&RankVector>,
) -> Result<(CorankVector, RankVector), ModuleError> {
    let m = data.mw_rank.0.len();
    assert_eq!(data.sha_div_corank.0.len(), m);
    let sha_p_layer = data.sha_finite.p_layer();
    let d = data.sha_finite.rank_vector_of(&sha_p_layer)?;
    if let Some(cert) = evenness_certificate {
        if cert != &d {
            return Err(ModuleError::CertificateMismatch);
        }
    }
    if !d.is_even() {
        return Err(ModuleError::OddShaLayer(d));
    }
    let rk_torsion = data.torsion.rank_vector()?;
    assert_eq!(rk_torsion.len(), m);
    assert_eq!(d.len(), m);
    // crk Sel_{p^infty} = mw + crk Sha_div  (divisible parts only).
    let crk = CorankVector(
        data.mw_rank.0.iter().zip(&data.sha_div_corank.0).map(|(a, b)| a + b).collect(),
    );
    // rk Sel_p = rk(X(K) (x) Z/p) + rk Sha[p]
    //          = (mw + rk X(K)[p]) + (crk Sha_div + d).
    let p_rank = RankVector(
        (0..m)
            .map(|i| data.mw_rank.0[i] + rk_torsion.0[i] + data.sha_div_corank.0[i] + d.0[i])
            .collect(),
    );
    // The congruence crk = p_rank - rk(torsion) mod 2 is now an identity:
    // (mw + div) - (mw + tors + div + d) + tors = -d, even.
    debug_assert!(
        crk.0
            .iter()
            .zip(p_rank.0.iter().zip(&rk_torsion.0))
            .all(|(&c, (&pr, &t))| (c as i64 - pr as i64 + t as i64).rem_euclid(2) == 0)
    );
    Ok((crk, p_rank))
}

// ---------------------------------------------------------------------------
// Convenience constructors used across the crate and tests
// ---------------------------------------------------------------------------

/// The regular module `R = O/pO` over itself (p-torsion): one generator per
/// power-basis element, x acting by the companion matrix of `f mod p`.
pub fn regular_module(split: &SplitRing) -> FiniteModule {
    let p = split.p();
    let fp = split.modulus_poly().reduce_to(p);
    let d = fp.degree().unwrap();
    let act = companion_rows(&fp);
    FiniteModule::new(BaseRing::Split(split.clone()), vec![1; d], &act, None, None)
        .expect("regular module is valid")
}

/// The component `R_i` as a module over the split ring: the x-action is the
/// companion matrix of `g_i mod p`.
pub fn component_module(split: &SplitRing, i: usize) -> FiniteModule {
    let p = split.p();
    let gi = split.split().factor(i).reduce_to(p);
    let act = companion_rows(&gi);
    FiniteModule::new(
        BaseRing::Split(split.clone()),
        vec![1; gi.degree().unwrap()],
        &act,
        None,
        None,
    )
    .expect("component module is valid")
}

/// Direct sum of `multiplicities[i]` copies of each component module.
pub fn component_sum_module(split: &SplitRing, multiplicities: &[usize]) -> FiniteModule {
    assert_eq!(multiplicities.len(), split.num_components());
    let mut acc: Option<FiniteModule> = None;
    for (i, &n) in multiplicities.iter().enumerate() {
        for _ in 0..n {
            let m = component_module(split, i);
            acc = Some(match acc {
                None => m,
                Some(a) => a.direct_sum(&m).unwrap(),
            });
        }
    }
    acc.unwrap_or_else(|| {
        FiniteModule::new(BaseRing::Split(split.clone()), vec![], &[], None, None).unwrap()
    })
}

/// Multiplication-by-x matrix on the power basis of `F_p[x]/(g)`, rows
/// convention (row `j` holds the coordinates of `x * x^j`).
pub fn companion_rows(g: &ModPoly) -> Vec<Vec<i64>> {
    let d = g.degree().unwrap();
    let q = g.modulus();
    let mut rows = vec![vec![0i64; d]; d];
    for j in 0..d.saturating_sub(1) {
        rows[j][j + 1] = 1;
    }
    for c in 0..d {
        // x * x^(d-1) = -g_lower(x)
        rows[d - 1][c] = (q as i64 - g.coeff(c) as i64) % q as i64;
    }
    rows
}
