use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

/// Dense matrix over `Z` with arbitrary-precision entries.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        IntMatrix { rows: nrows, cols: ncols, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn row_is_zero(&self, r: usize) -> bool {
        self.row(r).iter().all(|x| x.is_zero())
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let t = a * &other[(k, c)];
                    out[(r, c)] += t;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for i in 0..out.data.len() {
            out.data[i] += &other.data[i];
        }
        out
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for i in 0..out.data.len() {
            out.data[i] -= &other.data[i];
        }
        out
    }

    pub fn scalar_mul(&self, s: &BigInt) -> IntMatrix {
        let mut out = self.clone();
        for x in &mut out.data {
            *x = &*x * s;
        }
        out
    }

    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        IntMatrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self[(r, c)].clone();
            self[(r, c)] = v;
        }
    }

    /// row_r -= q * row_src
    fn row_submul(&mut self, r: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let t = q * &self[(src, c)];
            self[(r, c)] -= t;
        }
    }

    fn col_submul(&mut self, c: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let t = q * &self[(r, src)];
            self[(r, c)] -= t;
        }
    }

    /// Row Hermite normal form. Returns `(h, u)` with `h = u * self`, `u`
    /// unimodular, `h` upper echelon with positive pivots and entries above
    /// each pivot reduced into `[0, pivot)`. `h` keeps the shape of `self`;
    /// zero rows sink to the bottom.
    pub fn hermite_form(&self) -> (IntMatrix, IntMatrix) {
        let mut h = self.clone();
        let mut u = IntMatrix::identity(self.rows);
        let mut pivot_row = 0usize;
        for col in 0..self.cols {
            if pivot_row == h.rows {
                break;
            }
            // Euclid among the rows at and below pivot_row in this column.
            loop {
                let mut best: Option<usize> = None;
                for r in pivot_row..h.rows {
                    if !h[(r, col)].is_zero() {
                        let better = match best {
                            None => true,
                            Some(b) => h[(r, col)].abs() < h[(b, col)].abs(),
                        };
                        if better {
                            best = Some(r);
                        }
                    }
                }
                let Some(b) = best else { break };
                h.swap_rows(pivot_row, b);
                u.swap_rows(pivot_row, b);
                let mut done = true;
                for r in pivot_row + 1..h.rows {
                    if !h[(r, col)].is_zero() {
                        let q = &h[(r, col)] / &h[(pivot_row, col)];
                        h.row_submul(r, pivot_row, &q);
                        u.row_submul(r, pivot_row, &q);
                        if !h[(r, col)].is_zero() {
                            done = false;
                        }
                    }
                }
                if done {
                    break;
                }
            }
            if !h[(pivot_row, col)].is_zero() {
                if h[(pivot_row, col)].is_negative() {
                    h.negate_row(pivot_row);
                    u.negate_row(pivot_row);
                }
                for r in 0..pivot_row {
                    let q = h[(r, col)].div_floor(&h[(pivot_row, col)]);
                    h.row_submul(r, pivot_row, &q);
                    u.row_submul(r, pivot_row, &q);
                }
                pivot_row += 1;
            }
        }
        (h, u)
    }

    /// Basis of the left kernel `{x : x * self = 0}`, as rows. The basis is
    /// saturated (a basis of the kernel as a direct summand of `Z^rows`).
    pub fn left_kernel(&self) -> IntMatrix {
        let (h, u) = self.hermite_form();
        let mut rows = Vec::new();
        for r in 0..h.rows {
            if h.row_is_zero(r) {
                rows.push(u.row(r).to_vec());
            }
        }
        if rows.is_empty() {
            IntMatrix::zero(0, self.rows)
        } else {
            IntMatrix::from_rows(rows)
        }
    }

    /// Solve `x * self = b` over `Z`, one solution row per row of `b`.
    pub fn solve_left(&self, b: &IntMatrix) -> Option<IntMatrix> {
        assert_eq!(self.cols, b.cols, "shape mismatch in solve_left");
        let (h, u) = self.hermite_form();
        // Pivot columns of h, in row order.
        let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
        for r in 0..h.rows {
            if let Some(c) = (0..h.cols).find(|&c| !h[(r, c)].is_zero()) {
                pivots.push((r, c));
            }
        }
        let mut xs = Vec::with_capacity(b.rows);
        for br in 0..b.rows {
            let mut resid: Vec<BigInt> = b.row(br).to_vec();
            let mut y = vec![BigInt::zero(); h.rows];
            for &(r, c) in &pivots {
                if resid[c].is_zero() {
                    continue;
                }
                let (q, rem) = resid[c].div_rem(&h[(r, c)]);
                if !rem.is_zero() {
                    return None;
                }
                for cc in 0..h.cols {
                    let t = &q * &h[(r, cc)];
                    resid[cc] -= t;
                }
                y[r] = q;
            }
            if resid.iter().any(|x| !x.is_zero()) {
                return None;
            }
            // x = y * u
            let mut x = vec![BigInt::zero(); self.rows];
            for r in 0..h.rows {
                if y[r].is_zero() {
                    continue;
                }
                for c in 0..self.rows {
                    let t = &y[r] * &u[(r, c)];
                    x[c] += t;
                }
            }
            xs.push(x);
        }
        Some(IntMatrix::from_rows(xs))
    }

    /// Signed determinant by fraction-free (Bareiss) elimination.
    pub fn det_bareiss(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n.saturating_sub(1) {
            if m[(k, k)].is_zero() {
                let Some(r) = (k + 1..n).find(|&r| !m[(r, k)].is_zero()) else {
                    return BigInt::zero();
                };
                m.swap_rows(k, r);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = (&m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)]) / &prev;
                    m[(i, j)] = t;
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        let d = m[(n - 1, n - 1)].clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    /// Absolute determinant of a square matrix, read off the HNF diagonal.
    pub fn det_abs(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "det of non-square matrix");
        let (h, _) = self.hermite_form();
        let mut d = BigInt::one();
        for i in 0..self.rows {
            d *= &h[(i, i)];
        }
        d.abs()
    }

    /// Diagonal of the Smith normal form (nonzero invariant factors, in
    /// divisibility order). Used internally where diagonal invariants are
    /// needed; the Hermite and Howell forms are the canonical interfaces.
    pub fn smith_invariants(&self) -> Vec<BigInt> {
        let mut m = self.clone();
        let mut out = Vec::new();
        let mut top = 0usize;
        'outer: while top < m.rows && top < m.cols {
            // Find any nonzero entry in the trailing submatrix.
            let mut found = None;
            for r in top..m.rows {
                for c in top..m.cols {
                    if !m[(r, c)].is_zero() {
                        found = Some((r, c));
                        break;
                    }
                }
                if found.is_some() {
                    break;
                }
            }
            let Some((r0, c0)) = found else { break 'outer };
            m.swap_rows(top, r0);
            m.swap_cols(top, c0);
            loop {
                // Clear column `top` below the corner.
                loop {
                    let mut best: Option<usize> = None;
                    for r in top..m.rows {
                        if !m[(r, top)].is_zero() {
                            let better = match best {
                                None => true,
                                Some(b) => m[(r, top)].abs() < m[(b, top)].abs(),
                            };
                            if better {
                                best = Some(r);
                            }
                        }
                    }
                    let b = best.expect("corner vanished");
                    m.swap_rows(top, b);
                    let mut done = true;
                    for r in top + 1..m.rows {
                        if !m[(r, top)].is_zero() {
                            let q = &m[(r, top)] / &m[(top, top)];
                            m.row_submul(r, top, &q);
                            if !m[(r, top)].is_zero() {
                                done = false;
                            }
                        }
                    }
                    if done {
                        break;
                    }
                }
                // Clear row `top` to the right; may dirty the column again.
                loop {
                    let mut best: Option<usize> = None;
                    for c in top..m.cols {
                        if !m[(top, c)].is_zero() {
                            let better = match best {
                                None => true,
                                Some(b) => m[(top, c)].abs() < m[(top, b)].abs(),
                            };
                            if better {
                                best = Some(c);
                            }
                        }
                    }
                    let b = best.expect("corner vanished");
                    m.swap_cols(top, b);
                    let mut done = true;
                    for c in top + 1..m.cols {
                        if !m[(top, c)].is_zero() {
                            let q = &m[(top, c)] / &m[(top, top)];
                            m.col_submul(c, top, &q);
                            if !m[(top, c)].is_zero() {
                                done = false;
                            }
                        }
                    }
                    if done {
                        break;
                    }
                }
                // Column swaps during the row pass may have dirtied the
                // column; if so, run both passes again.
                if (top + 1..m.rows).any(|r| !m[(r, top)].is_zero()) {
                    continue;
                }
                // Corner divides everything else, or absorb an offender.
                let corner = m[(top, top)].clone();
                let mut offender = None;
                for r in top + 1..m.rows {
                    for c in top + 1..m.cols {
                        if !(&m[(r, c)] % &corner).is_zero() {
                            offender = Some(r);
                            break;
                        }
                    }
                    if offender.is_some() {
                        break;
                    }
                }
                match offender {
                    Some(r) => {
                        // Add the offending row to the corner row and restart.
                        for c in 0..m.cols {
                            let t = m[(r, c)].clone();
                            m[(top, c)] += t;
                        }
                    }
                    None => break,
                }
            }
            out.push(m[(top, top)].abs());
            top += 1;
        }
        out
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_i64_rows(rows)
    }

    #[test]
    fn hermite_already_reduced() {
        let a = m(&[vec![2, 0], vec![0, 3]]);
        let (h, u) = a.hermite_form();
        assert_eq!(h, a);
        assert_eq!(u.mul(&a), h);
    }

    #[test]
    fn hermite_zero_matrix() {
        let a = m(&[vec![0, 0], vec![0, 0]]);
        let (h, _) = a.hermite_form();
        assert!(h.is_zero());
        assert_eq!(h.rows(), 2);
    }

    #[test]
    fn hermite_rank_one() {
        // gcd(2,3) = 1 drives [[2,4],[3,6]] to a single row [1,2].
        let a = m(&[vec![2, 4], vec![3, 6]]);
        let (h, u) = a.hermite_form();
        assert_eq!(h.row(0), m(&[vec![1, 2]]).row(0));
        assert!(h.row_is_zero(1));
        assert_eq!(u.mul(&a), h);
        assert_eq!(u.det_abs(), BigInt::from(1));
    }

    #[test]
    fn hermite_idempotent() {
        let a = m(&[vec![4, 7, 2], vec![6, 3, 9], vec![2, 8, 5]]);
        let (h, _) = a.hermite_form();
        let (h2, _) = h.hermite_form();
        assert_eq!(h, h2);
    }

    #[test]
    fn kernel_and_solve() {
        let a = m(&[vec![2, 4], vec![3, 6], vec![1, 2]]);
        let k = a.left_kernel();
        assert_eq!(k.rows(), 2);
        assert!(k.mul(&a).is_zero());

        let b = m(&[vec![1, 2]]);
        let x = a.solve_left(&b).unwrap();
        assert_eq!(x.mul(&a), b);
        assert!(a.solve_left(&m(&[vec![1, 1]])).is_none());
    }

    #[test]
    fn smith_invariants_basic() {
        let a = m(&[vec![2, 0], vec![0, 4]]);
        assert_eq!(a.smith_invariants(), vec![BigInt::from(2), BigInt::from(4)]);
        let b = m(&[vec![0, 3], vec![9, 0]]);
        assert_eq!(b.smith_invariants(), vec![BigInt::from(3), BigInt::from(9)]);
        // 2x2 with invariants 1, 6.
        let c = m(&[vec![2, 1], vec![1, 3]]);
        let inv = c.smith_invariants();
        assert_eq!(inv, vec![BigInt::from(1), BigInt::from(5)]);
    }

    #[test]
    fn det_abs_matches_product() {
        let a = m(&[vec![2, 1], vec![1, 3]]);
        assert_eq!(a.det_abs(), BigInt::from(5));
    }
}
