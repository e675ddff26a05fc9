use num_bigint::BigInt;
use proptest::prelude::*;

use automorph::classes::primitive_automorphs;
use automorph::clifford::{
    algebra, even_norm_form, is_even_homomorphism, phi_lift, psi_lift, reconstruct_isometry, transfer_equivalence,
    CliffordElement, CliffordEven,
};
use automorph::intmat::{column_hnf, elementary_divisors, IntMatrix, SMatrix};
use automorph::qform::{jacobi, legendre, odd_primes_upto, QuadraticForm};
use automorph::reps::representation_counts;
use automorph::shimlift::dual_automorph;

fn ternary() -> impl Strategy<Value = QuadraticForm> {
    prop::collection::vec(-5i64..=5, 6).prop_filter_map("singular", |c| {
        QuadraticForm::new(3, &[vec![c[0], c[1], c[2]], vec![c[3], c[4]], vec![c[5]]]).ok().filter(|q| q.det() != 0)
    })
}

fn matrix3(range: i64) -> impl Strategy<Value = SMatrix> {
    prop::collection::vec(-range..=range, 9)
        .prop_map(|v| SMatrix::from_rows(v.chunks(3).map(|r| r.to_vec()).collect()))
        .prop_filter("singular", |a| a.det() != 0)
}

fn element(q: &QuadraticForm, c: &[i64]) -> CliffordElement {
    let alg = algebra(q).unwrap();
    CliffordElement::new(&alg, c.iter().map(|&x| BigInt::from(x)).collect())
}

fn unimodular(ops: &[(usize, usize, i64)]) -> SMatrix {
    let mut u = SMatrix::identity(3);
    for &(i, j, k) in ops {
        if i != j {
            let mut e = SMatrix::identity(3);
            e.set(i, j, k);
            u = u.mul(&e);
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clifford_associative_and_bar_reverses(
        q in ternary(),
        x in prop::collection::vec(-3i64..=3, 8),
        y in prop::collection::vec(-3i64..=3, 8),
        z in prop::collection::vec(-3i64..=3, 8),
    ) {
        let (x, y, z) = (element(&q, &x), element(&q, &y), element(&q, &z));
        prop_assert_eq!(x.mul(&y).unwrap().mul(&z).unwrap(), x.mul(&y.mul(&z).unwrap()).unwrap());
        prop_assert_eq!(x.mul(&y).unwrap().bar(), y.bar().mul(&x.bar()).unwrap());
        prop_assert_eq!(x.bar().bar(), x);
    }

    #[test]
    fn even_norm_is_multiplicative(
        q in ternary(),
        x in prop::array::uniform4(-4i64..=4),
        y in prop::array::uniform4(-4i64..=4),
    ) {
        let alg = algebra(&q).unwrap();
        let (x, y) = (CliffordEven::from_i64(&alg, x), CliffordEven::from_i64(&alg, y));
        let (nx, _) = x.norm_trace().unwrap();
        let (ny, _) = y.norm_trace().unwrap();
        let (nxy, _) = x.mul(&y).unwrap().norm_trace().unwrap();
        prop_assert_eq!(nxy, nx * ny);
    }

    #[test]
    fn lift_preserves_norm_and_reconstructs(q in ternary(), a in matrix3(3)) {
        let q2 = q.transform(&a).unwrap();
        let big = a.to_big();
        let phi = phi_lift(&q, &big).unwrap();
        let n = even_norm_form(&q).unwrap().matrix.to_big();
        let n2 = even_norm_form(&q2).unwrap().matrix.to_big();
        prop_assert_eq!(n.congruence(&phi), n2);
        prop_assert!(is_even_homomorphism(&phi, &q, &q2).unwrap());
        let r = reconstruct_isometry(&phi, &q, &q2).unwrap().unwrap();
        prop_assert!(r == big || r == big.neg());
    }

    #[test]
    fn norm_equivalence_transfers_back(
        q in ternary(),
        ops in prop::collection::vec((0usize..3, 0usize..3, -2i64..=2), 0..5),
    ) {
        let u = unimodular(&ops);
        let q2 = q.transform(&u).unwrap();
        let phi = phi_lift(&q, &u.to_big()).unwrap();
        let back = transfer_equivalence(&q, &q2, &phi).unwrap();
        prop_assert_eq!(q.gram().to_big().congruence(&back), q2.gram().to_big());
        prop_assert!(back.is_unimodular());
    }

    #[test]
    fn hnf_is_a_lattice_invariant(
        a in matrix3(6),
        ops in prop::collection::vec((0usize..3, 0usize..3, -3i64..=3), 0..6),
    ) {
        let u = unimodular(&ops);
        prop_assert_eq!(column_hnf(&a).unwrap(), column_hnf(&a.mul(&u)).unwrap());
        prop_assert_eq!(elementary_divisors(&a).unwrap(), elementary_divisors(&u.transpose().mul(&a)).unwrap());
        let b = a.to_big();
        prop_assert_eq!(b.left_divide(&b.mul(&u.to_big())), Some(u.to_big()));
    }

    #[test]
    fn jacobi_is_multiplicative(a in -200i64..200, m in 0i64..40, n in 0i64..40) {
        let (m, n) = (2 * m + 1, 2 * n + 1);
        prop_assert_eq!(jacobi(a, m * n), jacobi(a, m) * jacobi(a, n));
    }

    #[test]
    fn counts_match_box_enumeration(
        d in prop::array::uniform3(3i64..=6),
        off in prop::array::uniform3(-1i64..=1),
    ) {
        let q = QuadraticForm::new(3, &[vec![d[0], off[0], off[1]], vec![d[1], off[2]], vec![d[2]]]).unwrap();
        let n_max = 40;
        let counts = representation_counts(&q, n_max).unwrap();
        // q(x) ≥ |x|² here, so |xᵢ| ≤ √n_max.
        let mut brute = vec![0u64; n_max as usize + 1];
        for x in -7i64..=7 {
            for y in -7i64..=7 {
                for z in -7i64..=7 {
                    let v = q.evaluate(&[x, y, z]);
                    if v <= n_max {
                        brute[v as usize] += 1;
                    }
                }
            }
        }
        prop_assert_eq!(counts, brute);
    }
}

#[test]
fn legendre_matches_euler_criterion() {
    for p in odd_primes_upto(200) {
        for a in -50..50i64 {
            let e = BigInt::from(a).modpow(&BigInt::from((p - 1) / 2), &BigInt::from(p));
            let want = if e == BigInt::from(0) {
                0
            } else if e == BigInt::from(1) {
                1
            } else {
                -1
            };
            assert_eq!(legendre(a, p), want, "({a}/{p})");
        }
    }
}

#[test]
fn dual_lift_inverts_up_to_p_squared() {
    let q = QuadraticForm::sum_of_squares(3);
    for p in [3, 5] {
        for a in primitive_automorphs(&q, &q, p * p).unwrap() {
            let b = dual_automorph(&a, p).unwrap();
            let pa = psi_lift(&q, &a.to_big(), p).unwrap().psi;
            let pb = psi_lift(&q, &b.to_big(), p).unwrap().psi;
            assert_eq!(pa.mul(&pb), IntMatrix::scalar(4, BigInt::from(p * p)));
        }
    }
}

#[test]
fn non_lift_is_rejected() {
    let q = QuadraticForm::sum_of_squares(3);
    let swap =
        SMatrix::from_rows(vec![vec![0, 1, 0, 0], vec![1, 0, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 1]]).to_big();
    assert!(!is_even_homomorphism(&swap, &q, &q).unwrap());
    assert_eq!(reconstruct_isometry(&swap, &q, &q).ok().flatten(), None);
}
