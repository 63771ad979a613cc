//! Property tests for the structural invariants of the linear-algebra layer
//! and the rank calculus.

use dihedral::linalg::{IntMatrix, ResidueMatrix, Zpe};
use dihedral::ring::{NumberRing, SplitRing};
use dihedral::torsion::component_sum_module;
use num_bigint::BigInt;
use num_traits::Signed;
use proptest::prelude::*;

fn residue_matrix(ctx: Zpe, max_rows: usize, cols: usize) -> impl Strategy<Value = ResidueMatrix> {
    let q = ctx.modulus();
    prop::collection::vec(prop::collection::vec(0..q, cols), 1..=max_rows)
        .prop_map(move |rows| ResidueMatrix::from_rows(ctx, &rows))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Two generator matrices span the same submodule iff their Howell forms
    // are identical; checked against exhaustive span enumeration.
    #[test]
    fn howell_is_canonical(
        m in residue_matrix(Zpe::new(3, 3), 4, 3),
        ops in prop::collection::vec((0usize..4, 0usize..4, 0u64..27, 1u64..27), 0..8),
    ) {
        let ctx = m.ctx();
        let q = ctx.modulus();
        // Apply span-preserving operations: add multiples of rows to rows,
        // multiply rows by units, append combinations.
        let mut rows = m.row_vecs();
        for (i, j, c, u) in ops {
            let i = i % rows.len();
            let j = j % rows.len();
            if i != j {
                let src = rows[j].clone();
                for (a, b) in rows[i].iter_mut().zip(&src) {
                    *a = (*a + c * b) % q;
                }
            } else if u % 3 != 0 {
                for a in rows[i].iter_mut() {
                    *a = (*a * u) % q;
                }
            }
        }
        // Append one redundant combination.
        let extra: Vec<u64> = (0..3)
            .map(|c| rows.iter().fold(0u64, |acc, r| (acc + r[c]) % q))
            .collect();
        rows.push(extra);
        let scrambled = ResidueMatrix::from_rows(ctx, &rows);
        let spans_equal = {
            let a: std::collections::BTreeSet<_> =
                m.enumerate_span(30000).into_iter().collect();
            let b: std::collections::BTreeSet<_> =
                scrambled.enumerate_span(30000).into_iter().collect();
            a == b
        };
        prop_assert!(spans_equal, "operations failed to preserve the span");
        prop_assert_eq!(m.howell_form(), scrambled.howell_form());
    }

    // Solving returns an exact solution whenever the target is built from
    // the row span.
    #[test]
    fn solve_recovers_membership(
        a in residue_matrix(Zpe::new(3, 2), 3, 3),
        coeffs in prop::collection::vec(0u64..9, 3),
    ) {
        let ctx = a.ctx();
        let mut b = vec![0u64; a.cols()];
        for (k, &c) in coeffs.iter().enumerate().take(a.rows()) {
            for j in 0..a.cols() {
                b[j] = (b[j] + c * a.row(k)[j]) % ctx.modulus();
            }
        }
        let target = ResidueMatrix::from_rows(ctx, &[b.clone()]);
        let x = a.solve_linear(&target).expect("member must be solvable");
        prop_assert_eq!(x.mul(&a), target);
    }

    // Hermite form is idempotent with a unimodular transform.
    #[test]
    fn hermite_idempotent_and_unimodular(
        rows in prop::collection::vec(prop::collection::vec(-30i64..30, 3), 1..5),
    ) {
        let m = IntMatrix::from_i64_rows(&rows);
        let (h, u) = m.hermite_form();
        prop_assert_eq!(u.mul(&m), h.clone());
        prop_assert_eq!(u.det_bareiss().abs(), BigInt::from(1));
        let (h2, _) = h.hermite_form();
        prop_assert_eq!(h, h2);
    }

    // Over a prime field the left kernel dimension complements the rank.
    #[test]
    fn kernel_rank_duality(m in residue_matrix(Zpe::new(5, 1), 5, 4)) {
        let rank = m.howell_form().rows();
        let nullity = m.kernel().rows();
        prop_assert_eq!(rank + nullity, m.rows());
    }
}

// Rank additivity over direct sums, exhaustively for up to three summands
// over both the split and the inert residue ring.
#[test]
fn rank_additivity_exhaustive_small() {
    for p in [3u64, 5] {
        let split = SplitRing::from_number_ring(&NumberRing::gaussian(), p, 1).unwrap();
        let m = split.num_components();
        let mut profiles: Vec<Vec<usize>> = Vec::new();
        // All component multiplicity vectors with at most 3 total summands.
        fn extend(profiles: &mut Vec<Vec<usize>>, cur: Vec<usize>, left: usize, slots: usize) {
            if cur.len() == slots {
                profiles.push(cur);
                return;
            }
            for k in 0..=left {
                let mut next = cur.clone();
                next.push(k);
                extend(profiles, next, left - k, slots);
            }
        }
        extend(&mut profiles, vec![], 3, m);
        for a in &profiles {
            for b in &profiles {
                let total: usize = a.iter().sum::<usize>() + b.iter().sum::<usize>();
                if total > 3 {
                    continue;
                }
                let ma = component_sum_module(&split, a);
                let mb = component_sum_module(&split, b);
                let sum = ma.direct_sum(&mb).unwrap();
                assert_eq!(
                    sum.rank_vector().unwrap(),
                    ma.rank_vector().unwrap().add(&mb.rank_vector().unwrap()),
                    "p={p} a={a:?} b={b:?}"
                );
            }
        }
    }
}

// A semilinear group automorphism forces equal ranks for a module and its
// involution twist.
#[test]
fn semilinear_isomorphism_equalizes_ranks() {
    let split = SplitRing::from_number_ring(&NumberRing::gaussian(), 5, 1).unwrap();
    let n = component_sum_module(&split, &[2, 1]);
    let n_dag = n.dagger_module().unwrap();
    // M = N + N^dagger carries the swap as a semilinear automorphism.
    let m = n.direct_sum(&n_dag).unwrap();
    let dim = m.num_generators();
    let half = dim / 2;
    let mut swap = vec![vec![0i64; dim]; dim];
    for i in 0..half {
        swap[i][half + i] = 1;
        swap[half + i][i] = 1;
    }
    let c = m.embed_operator(&swap).unwrap();
    // Semilinearity: c conjugates the action to the dagger action.
    let q = m.ctx().modulus();
    let dagger = split.dagger_poly().unwrap().reduce_to(q);
    let act_dag = dagger.eval_matrix(m.act_x());
    assert_eq!(m.act_x().mul(&c), c.mul(&act_dag));
    // Hence the rank vector is dagger-symmetric.
    let rk = m.rank_vector().unwrap();
    let rk_dag = m.dagger_module().unwrap().rank_vector().unwrap();
    assert_eq!(rk, rk_dag);
}
