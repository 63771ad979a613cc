use serde::{Deserialize, Serialize};
use std::fmt;

/// Arithmetic context for `Z/p^e`, `p` an odd prime.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zpe {
    p: u64,
    e: u32,
    q: u64,
}

impl fmt::Debug for Zpe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p, self.e)
    }
}

fn is_prime(n: u64) -> bool {
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

impl Zpe {
    /// Panics unless `p` is an odd prime, `e >= 1` and `p^e` fits `u64`.
    pub fn new(p: u64, e: u32) -> Zpe {
        assert!(p % 2 == 1 && is_prime(p), "modulus base {p} is not an odd prime");
        assert!(e >= 1, "exponent must be at least 1");
        let mut q: u64 = 1;
        for _ in 0..e {
            q = q.checked_mul(p).expect("modulus overflows u64");
        }
        assert!(q < (1 << 62), "modulus too large");
        Zpe { p, e, q }
    }

    /// Recover `(p, e)` from a prime-power modulus; `None` if `q` is not an
    /// odd prime power.
    pub fn from_modulus(q: u64) -> Option<Zpe> {
        if q < 3 || q % 2 == 0 {
            return None;
        }
        let mut p = 3u64;
        while p * p <= q {
            if q % p == 0 {
                let mut rest = q;
                let mut e = 0;
                while rest % p == 0 {
                    rest /= p;
                    e += 1;
                }
                return if rest == 1 { Some(Zpe::new(p, e)) } else { None };
            }
            p += 2;
        }
        // q itself is prime.
        Some(Zpe::new(q, 1))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Context for the same prime with a different exponent.
    pub fn with_exponent(&self, e: u32) -> Zpe {
        Zpe::new(self.p, e)
    }

    pub fn reduce_i64(&self, x: i64) -> u64 {
        let q = self.q as i128;
        let r = (x as i128).rem_euclid(q);
        r as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.q as u128) as u64
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let s = a as u128 + (self.q - b % self.q) as u128;
        (s % self.q as u128) as u64
    }

    pub fn neg(&self, a: u64) -> u64 {
        if a % self.q == 0 {
            0
        } else {
            self.q - a % self.q
        }
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.q as u128) as u64
    }

    pub fn pow(&self, mut a: u64, mut n: u64) -> u64 {
        let mut acc = 1u64;
        a %= self.q;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            n >>= 1;
        }
        acc
    }

    /// Inverse of a unit. Panics if `gcd(a, p) != 1`.
    pub fn inv(&self, a: u64) -> u64 {
        let (g, x, _) = egcd(a as i128, self.q as i128);
        assert!(g == 1, "{} is not a unit mod {}", a, self.q);
        x.rem_euclid(self.q as i128) as u64
    }

    /// p-adic valuation of a residue; the zero residue gets valuation `e`.
    pub fn val(&self, a: u64) -> u32 {
        let mut a = a % self.q;
        if a == 0 {
            return self.e;
        }
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }

    /// Unit `u` with `a = u * p^val(a)`; `1` for the zero residue.
    pub fn unit_part(&self, a: u64) -> u64 {
        let a = a % self.q;
        if a == 0 {
            return 1;
        }
        a / self.p.pow(self.val(a))
    }

    pub fn p_power(&self, k: u32) -> u64 {
        assert!(k <= self.e);
        self.p.pow(k)
    }
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = egcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Dense matrix over `Z/p^e`. Entries are kept reduced into `[0, p^e)`.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueMatrix {
    ctx: Zpe,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl fmt::Debug for ResidueMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ResidueMatrix {}x{} mod {} [", self.rows, self.cols, self.ctx.modulus())?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for ResidueMatrix {
    type Output = u64;
    fn index(&self, (r, c): (usize, usize)) -> &u64 {
        &self.data[r * self.cols + c]
    }
}

impl ResidueMatrix {
    pub fn zero(ctx: Zpe, rows: usize, cols: usize) -> Self {
        ResidueMatrix { ctx, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(ctx: Zpe, n: usize) -> Self {
        let mut m = Self::zero(ctx, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(ctx: Zpe, rows: &[Vec<u64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        let q = ctx.modulus();
        let data = rows.iter().flatten().map(|&x| x % q).collect();
        ResidueMatrix { ctx, rows: nrows, cols: ncols, data }
    }

    pub fn from_signed_rows(ctx: Zpe, rows: &[Vec<i64>]) -> Self {
        Self::from_rows(
            ctx,
            &rows.iter().map(|r| r.iter().map(|&x| ctx.reduce_i64(x)).collect()).collect::<Vec<_>>(),
        )
    }

    pub fn empty(ctx: Zpe, cols: usize) -> Self {
        Self::zero(ctx, 0, cols)
    }

    pub fn ctx(&self) -> Zpe {
        self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v % self.ctx.modulus();
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn transpose(&self) -> ResidueMatrix {
        let mut t = ResidueMatrix::zero(self.ctx, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self[(r, c)];
            }
        }
        t
    }

    pub fn mul(&self, other: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        assert_eq!(self.ctx, other.ctx, "modulus mismatch in mul");
        let q = self.ctx.modulus() as u128;
        let mut out = ResidueMatrix::zero(self.ctx, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)] as u128;
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let cur = out.data[r * other.cols + c] as u128;
                    out.data[r * other.cols + c] = ((cur + a * other[(k, c)] as u128) % q) as u64;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for i in 0..out.data.len() {
            out.data[i] = self.ctx.add(out.data[i], other.data[i]);
        }
        out
    }

    pub fn sub(&self, other: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for i in 0..out.data.len() {
            out.data[i] = self.ctx.sub(out.data[i], other.data[i]);
        }
        out
    }

    pub fn neg(&self) -> ResidueMatrix {
        let mut out = self.clone();
        for x in &mut out.data {
            *x = self.ctx.neg(*x);
        }
        out
    }

    pub fn scalar_mul(&self, s: u64) -> ResidueMatrix {
        let mut out = self.clone();
        for x in &mut out.data {
            *x = self.ctx.mul(*x, s);
        }
        out
    }

    /// `self + s * I` for square matrices.
    pub fn add_scalar_diag(&self, s: u64) -> ResidueMatrix {
        assert_eq!(self.rows, self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            out.data[i * self.cols + i] = self.ctx.add(out.data[i * self.cols + i], s);
        }
        out
    }

    pub fn vstack(&self, other: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!(self.cols, other.cols);
        assert_eq!(self.ctx, other.ctx);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        ResidueMatrix { ctx: self.ctx, rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn hstack(&self, other: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.ctx, other.ctx);
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        ResidueMatrix { ctx: self.ctx, rows: self.rows, cols: self.cols + other.cols, data }
    }

    pub fn select_cols(&self, range: std::ops::Range<usize>) -> ResidueMatrix {
        let mut data = Vec::with_capacity(self.rows * range.len());
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[range.clone()]);
        }
        ResidueMatrix { ctx: self.ctx, rows: self.rows, cols: range.len(), data }
    }

    pub fn apply_row(&self, x: &[u64]) -> Vec<u64> {
        assert_eq!(x.len(), self.rows, "vector/matrix shape mismatch");
        let q = self.ctx.modulus() as u128;
        let mut out = vec![0u64; self.cols];
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0 {
                continue;
            }
            for c in 0..self.cols {
                out[c] = ((out[c] as u128 + xk as u128 * self[(k, c)] as u128) % q) as u64;
            }
        }
        out
    }

    /// The Howell form of the row span: canonical for span equality, with
    /// zero rows dropped. Every element of the span whose leading
    /// coordinates vanish is a combination of the later rows.
    pub fn howell_form(&self) -> ResidueMatrix {
        let placed = howell_rows(&self.ctx, self.row_vecs(), self.cols);
        let rows: Vec<Vec<u64>> = placed.into_iter().map(|(_, r)| r).collect();
        if rows.is_empty() {
            ResidueMatrix::empty(self.ctx, self.cols)
        } else {
            ResidueMatrix::from_rows(self.ctx, &rows)
        }
    }

    /// Generators of `{x : x * self = 0}`, in Howell form.
    pub fn kernel(&self) -> ResidueMatrix {
        let aug = self.hstack(&ResidueMatrix::identity(self.ctx, self.rows));
        let placed = howell_rows(&self.ctx, aug.row_vecs(), aug.cols);
        let mut rows = Vec::new();
        for (col, row) in placed {
            if col >= self.cols {
                rows.push(row[self.cols..].to_vec());
            }
        }
        if rows.is_empty() {
            ResidueMatrix::empty(self.ctx, self.rows)
        } else {
            ResidueMatrix::from_rows(self.ctx, &rows)
        }
    }

    /// Solve `x * self = b`, one solution row per row of `b`; `None` when
    /// any row of `b` lies outside the row span of `self`.
    pub fn solve_linear(&self, b: &ResidueMatrix) -> Option<ResidueMatrix> {
        assert_eq!(self.ctx, b.ctx, "modulus mismatch in solve");
        assert_eq!(self.cols, b.cols, "shape mismatch in solve");
        let ctx = self.ctx;
        let aug = self.hstack(&ResidueMatrix::identity(ctx, self.rows));
        let placed = howell_rows(&ctx, aug.row_vecs(), aug.cols);
        let mut xs = Vec::with_capacity(b.rows);
        for br in 0..b.rows {
            let mut resid = b.row(br).to_vec();
            let mut x = vec![0u64; self.rows];
            for (col, row) in &placed {
                if *col >= self.cols {
                    break;
                }
                let a = resid[*col];
                if a == 0 {
                    continue;
                }
                let pv = ctx.val(row[*col]);
                if ctx.val(a) < pv {
                    return None;
                }
                let k = a / ctx.p_power(pv);
                for c in 0..self.cols {
                    resid[c] = ctx.sub(resid[c], ctx.mul(k, row[c]));
                }
                for c in 0..self.rows {
                    x[c] = ctx.add(x[c], ctx.mul(k, row[self.cols + c]));
                }
            }
            if resid.iter().any(|&v| v != 0) {
                return None;
            }
            xs.push(x);
        }
        if xs.is_empty() {
            return Some(ResidueMatrix::zero(ctx, 0, self.rows));
        }
        Some(ResidueMatrix::from_rows(ctx, &xs))
    }

    /// Membership in the row span.
    pub fn span_contains(&self, v: &[u64]) -> bool {
        assert_eq!(v.len(), self.cols);
        let placed = howell_rows(&self.ctx, self.row_vecs(), self.cols);
        reduce_against(&self.ctx, &placed, v).iter().all(|&x| x == 0)
    }

    /// Number of elements of the row span. Only meaningful on Howell-form
    /// matrices (each row then contributes `p^(e - val(pivot))` independently).
    pub fn span_size(&self) -> u128 {
        let mut size: u128 = 1;
        for r in 0..self.rows {
            let Some(c) = (0..self.cols).find(|&c| self[(r, c)] != 0) else { continue };
            let v = self.ctx.val(self[(r, c)]);
            size *= self.ctx.p_power(self.ctx.e() - v) as u128;
        }
        size
    }

    /// Enumerate every element of the row span. Guarded by `cap`: panics if
    /// the span has more elements than `cap`. Meant for brute-force oracles
    /// on desk-size instances.
    pub fn enumerate_span(&self, cap: usize) -> Vec<Vec<u64>> {
        let h = self.howell_form();
        let size = h.span_size();
        assert!(size <= cap as u128, "span too large to enumerate ({size} > {cap})");
        let ctx = self.ctx;
        let mut out: Vec<Vec<u64>> = vec![vec![0; self.cols]];
        for r in 0..h.rows {
            let c = (0..h.cols).find(|&c| h[(r, c)] != 0).unwrap();
            let ord = ctx.p_power(ctx.e() - ctx.val(h[(r, c)]));
            let mut next = Vec::with_capacity(out.len() * ord as usize);
            for base in &out {
                for k in 0..ord {
                    let mut v = base.clone();
                    for j in 0..self.cols {
                        v[j] = ctx.add(v[j], ctx.mul(k, h[(r, j)]));
                    }
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }
}

/// Intersection of two row spans over the same context and width.
pub fn span_intersection(a: &ResidueMatrix, b: &ResidueMatrix) -> ResidueMatrix {
    assert_eq!(a.ctx, b.ctx);
    assert_eq!(a.cols, b.cols);
    if a.rows == 0 || b.rows == 0 {
        return ResidueMatrix::empty(a.ctx, a.cols);
    }
    let stacked = a.vstack(b);
    let k = stacked.kernel();
    let mut rows = Vec::new();
    for r in 0..k.rows() {
        let coeffs = &k.row(r)[..a.rows];
        let v = a.apply_row_partial(coeffs);
        rows.push(v);
    }
    if rows.is_empty() {
        ResidueMatrix::empty(a.ctx, a.cols)
    } else {
        ResidueMatrix::from_rows(a.ctx, &rows).howell_form()
    }
}

/// Sum of two row spans, in Howell form.
pub fn span_sum(a: &ResidueMatrix, b: &ResidueMatrix) -> ResidueMatrix {
    a.vstack(b).howell_form()
}

impl ResidueMatrix {
    fn apply_row_partial(&self, coeffs: &[u64]) -> Vec<u64> {
        assert!(coeffs.len() <= self.rows);
        let q = self.ctx.modulus() as u128;
        let mut out = vec![0u64; self.cols];
        for (k, &xk) in coeffs.iter().enumerate() {
            if xk == 0 {
                continue;
            }
            for c in 0..self.cols {
                out[c] = ((out[c] as u128 + xk as u128 * self[(k, c)] as u128) % q) as u64;
            }
        }
        out
    }
}

/// Core Howell elimination. Returns placed rows as `(pivot column, row)`,
/// sorted by pivot column, fully reduced (pivots are pure powers of `p`,
/// entries above a pivot lie in `[0, pivot)`), with the Howell closure rows
/// included. Dropping the pivot columns yields the canonical Howell form.
fn howell_rows(ctx: &Zpe, rows: Vec<Vec<u64>>, width: usize) -> Vec<(usize, Vec<u64>)> {
    let q = ctx.modulus();
    let mut active: Vec<Vec<u64>> = rows
        .into_iter()
        .map(|mut r| {
            for x in &mut r {
                *x %= q;
            }
            r
        })
        .filter(|r| r.iter().any(|&x| x != 0))
        .collect();
    let mut placed: Vec<(usize, Vec<u64>)> = Vec::new();
    for col in 0..width {
        // Pick the candidate of minimal valuation at this column.
        let mut best: Option<(usize, u32)> = None;
        for (i, row) in active.iter().enumerate() {
            if row[col] != 0 {
                let v = ctx.val(row[col]);
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((i, v));
                }
            }
        }
        let Some((pi, v)) = best else { continue };
        let mut pivot = active.remove(pi);
        let u_inv = ctx.inv(ctx.unit_part(pivot[col]));
        for x in &mut pivot {
            *x = ctx.mul(*x, u_inv);
        }
        debug_assert_eq!(pivot[col], ctx.p_power(v));
        let pv = ctx.p_power(v);
        for row in &mut active {
            if row[col] != 0 {
                debug_assert!(ctx.val(row[col]) >= v);
                let k = row[col] / pv;
                for c in col..width {
                    row[c] = ctx.sub(row[c], ctx.mul(k, pivot[c]));
                }
            }
        }
        active.retain(|r| r.iter().any(|&x| x != 0));
        if v > 0 {
            // Howell closure: expose the part of the span hidden below the
            // pivot's annihilator.
            let mult = ctx.p_power(ctx.e() - v);
            let shadow: Vec<u64> = pivot.iter().map(|&x| ctx.mul(x, mult)).collect();
            if shadow.iter().any(|&x| x != 0) {
                active.push(shadow);
            }
        }
        placed.push((col, pivot));
    }
    // Reduce entries above each pivot into [0, pivot).
    for j in 0..placed.len() {
        let (cj, rowj) = placed[j].clone();
        let pv = ctx.p_power(ctx.val(rowj[cj]));
        for i in 0..j {
            let a = placed[i].1[cj];
            let k = a / pv;
            if k != 0 {
                for c in 0..width {
                    placed[i].1[c] = ctx.sub(placed[i].1[c], ctx.mul(k, rowj[c]));
                }
            }
        }
    }
    placed
}

fn reduce_against(ctx: &Zpe, placed: &[(usize, Vec<u64>)], v: &[u64]) -> Vec<u64> {
    let mut resid = v.to_vec();
    for x in &mut resid {
        *x %= ctx.modulus();
    }
    for (col, row) in placed {
        if resid[*col] == 0 {
            continue;
        }
        let pv = ctx.val(row[*col]);
        if ctx.val(resid[*col]) < pv {
            continue;
        }
        let k = resid[*col] / ctx.p_power(pv);
        for c in 0..resid.len() {
            resid[c] = ctx.sub(resid[c], ctx.mul(k, row[c]));
        }
    }
    resid
}
