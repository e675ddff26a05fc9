//! The automorph class lift A ↦ Ψ_A and its factorization through the left
//! ideal 𝔍_A = C₀(E)·φ_A(pC₀(E′)): ideal generators, divisibility, the inverse
//! map on classes, Υ_A, and the two-fold covering of ternary classes.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::classes::{anzahl_matrix, mat_mul, primitive_automorphs, SimilaritySystem};
use crate::clifford::{algebra, psi_lift, CliffordEven};
use crate::intmat::{column_hnf, complete_to_unimodular, lattice_mod, modp, IntMatrix, SMatrix};
use crate::qform::{character, QuadraticForm};
use crate::reps::{self, Side};
use crate::{Error, Result};

/// 𝓘_A with its index and the form f = p⁻¹N[𝓘_A].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealFactor {
    pub source: SMatrix,
    pub p: i64,
    pub generator: IntMatrix,
    pub index: BigInt,
    pub form_f: QuadraticForm,
}

fn check_prime(q: &QuadraticForm, p: i64) -> Result<()> {
    if p == 2 {
        return Err(Error::EvenPrime);
    }
    if q.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    Ok(())
}

fn small(m: &IntMatrix) -> Result<SMatrix> {
    m.to_small().ok_or_else(|| Error::Invalid("matrix entry exceeds 64 bits".into()))
}

/// q′ = p⁻²·q[A].
pub fn target_form(q: &QuadraticForm, a: &SMatrix, p: i64) -> Result<QuadraticForm> {
    let g = q.gram().congruence(a);
    let g = g.div_exact(&(p * p)).ok_or_else(|| Error::Invalid("Q[A] is not divisible by p²".into()))?;
    QuadraticForm::from_gram(&g)
}

/// p²A⁻¹, an automorph of q′ = p⁻²q[A] with multiplier p².
pub fn dual_automorph(a: &SMatrix, p: i64) -> Result<SMatrix> {
    let adj = a.adjoint().scale(&(p * p));
    adj.div_exact(&a.det()).ok_or(Error::Inconsistent)
}

fn scaled_inverse(m: &IntMatrix, s: &BigInt) -> Result<IntMatrix> {
    let det = m.det();
    if det.is_zero() {
        return Err(Error::Singular);
    }
    m.adjoint().scale(s).div_exact(&det).ok_or(Error::Inconsistent)
}

fn ideal_generator(q: &QuadraticForm, psi: &IntMatrix, right: bool) -> Result<IntMatrix> {
    let alg = algebra(q)?;
    let mut cols = Vec::with_capacity(16);
    for j in 0..4 {
        let y = CliffordEven::new(&alg, psi.col(j));
        for i in 0..4 {
            let b = CliffordEven::basis(&alg, i);
            let x = if right { y.mul(&b)? } else { b.mul(&y)? };
            cols.push(x.coeffs);
        }
    }
    column_hnf(&IntMatrix::from_cols(&cols))
}

fn extension(q: &QuadraticForm, a: &SMatrix, p: i64, right: bool) -> Result<IdealFactor> {
    check_prime(q, p)?;
    if a.content() != 1 {
        return Err(Error::NotPrimitiveAutomorph);
    }
    let lift = psi_lift(q, &a.to_big(), p)?;
    let gen = ideal_generator(q, &lift.psi, right)?;
    let index = gen.det().abs();
    if index != BigInt::from(p * p) {
        return Err(Error::Inconsistent);
    }
    let n = crate::clifford::even_norm_form(q)?.matrix.to_big();
    let f = n.congruence(&gen).div_exact(&BigInt::from(p)).ok_or(Error::Inconsistent)?;
    let form_f = QuadraticForm::from_gram(&small(&f)?)?;
    Ok(IdealFactor { source: a.clone(), p, generator: gen, index, form_f })
}

/// Generator of the left ideal C₀(E)·φ_A(pC₀(E′)) in column Hermite form.
pub fn ideal_extension(q: &QuadraticForm, a: &SMatrix, p: i64) -> Result<IdealFactor> {
    extension(q, a, p, false)
}

/// Generator of the right ideal φ_A(pC₀(E′))·C₀(E).
pub fn right_ideal_extension(q: &QuadraticForm, a: &SMatrix, p: i64) -> Result<IdealFactor> {
    extension(q, a, p, true)
}

fn check_index(m: &IntMatrix, p: i64) -> Result<()> {
    if m.rows() != 4 || m.cols() != 4 {
        return Err(Error::DimensionMismatch);
    }
    if m.det().abs() != BigInt::from(p * p) {
        return Err(Error::Invalid("divisor must have |det| = p²".into()));
    }
    Ok(())
}

/// Whether M⁻¹Ψ_A is integral.
pub fn divides_left(m: &IntMatrix, q: &QuadraticForm, a: &SMatrix, p: i64) -> Result<bool> {
    check_index(m, p)?;
    let psi = psi_lift(q, &a.to_big(), p)?.psi;
    Ok(m.left_divide(&psi).is_some())
}

/// The same test through Ψ_{p²A⁻¹}·M ≡ 0 mod p.
pub fn divides_left_mod_p(m: &IntMatrix, q: &QuadraticForm, a: &SMatrix, p: i64) -> Result<bool> {
    check_index(m, p)?;
    let q2 = target_form(q, a, p)?;
    let b = dual_automorph(a, p)?;
    let psi = psi_lift(&q2, &b.to_big(), p)?.psi;
    Ok(psi.mul(m).all_divisible_by(&BigInt::from(p)))
}

/// Υ_A = p·(𝓘_{p²A⁻¹})⁻¹.
pub fn upsilon(q: &QuadraticForm, a: &SMatrix, p: i64) -> Result<IntMatrix> {
    check_prime(q, p)?;
    if a.content() != 1 {
        return Err(Error::NotPrimitiveAutomorph);
    }
    let q2 = target_form(q, a, p)?;
    let b = dual_automorph(a, p)?;
    let gen = ideal_extension(&q2, &b, p)?.generator;
    scaled_inverse(&gen, &BigInt::from(p))
}

pub fn rank_mod_p(m: &IntMatrix, p: i64) -> usize {
    let bp = BigInt::from(p);
    let rows: Vec<Vec<i64>> =
        m.to_rows().iter().map(|r| r.iter().map(|x| x.mod_floor(&bp).to_i64().expect("reduced")).collect()).collect();
    modp::rank(&rows, p)
}

/// "i|a,b,c;d,e,f;…" for a class of the i-th system form.
pub fn class_key(i: usize, m: &SMatrix) -> String {
    let rows: Vec<String> =
        m.to_rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")).collect();
    format!("{i}|{}", rows.join(";"))
}

/// A class of automorphs: the index of the system form on the unit side and a
/// canonical representative.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AutomorphClass {
    pub form: usize,
    pub rep: SMatrix,
}

impl AutomorphClass {
    pub fn key(&self) -> String {
        class_key(self.form, &self.rep)
    }
}

fn collect_classes<F>(system: &SimilaritySystem, side: Side, mats_for: F) -> Result<Vec<AutomorphClass>>
where
    F: Fn(&QuadraticForm) -> Result<Vec<SMatrix>> + Sync,
{
    let per: Vec<Result<Vec<AutomorphClass>>> = (0..system.h())
        .into_par_iter()
        .map(|i| {
            let mats = mats_for(&system.forms[i])?;
            let cl = reps::coset_decompose_matrices(&mats, &system.unit_groups[i], side);
            Ok(cl.representatives.into_iter().map(|rep| AutomorphClass { form: i, rep }).collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per {
        out.extend(r?);
    }
    Ok(out)
}

/// ⋃ᵢ R*(q, p²qᵢ)/E(qᵢ).
pub fn ternary_right_classes(system: &SimilaritySystem, p: i64) -> Result<Vec<AutomorphClass>> {
    let q = &system.forms[0];
    check_prime(q, p)?;
    collect_classes(system, Side::Right, |qi| primitive_automorphs(q, qi, p * p))
}

/// ⋃ᵢ E(qᵢ)\R*(qᵢ, p²q).
pub fn ternary_left_classes(system: &SimilaritySystem, p: i64) -> Result<Vec<AutomorphClass>> {
    let q = &system.forms[0];
    check_prime(q, p)?;
    collect_classes(system, Side::Left, |qi| primitive_automorphs(qi, q, p * p))
}

/// ⋃ⱼ R(n, pnⱼ)/E(nⱼ).
pub fn quaternary_right_classes(system: &SimilaritySystem, p: i64) -> Result<Vec<AutomorphClass>> {
    let n = &system.forms[0];
    collect_classes(system, Side::Right, |nj| reps::automorph_matrices(n, nj, p))
}

/// ⋃ⱼ E(nⱼ)\R(nⱼ, pn).
pub fn quaternary_left_classes(system: &SimilaritySystem, p: i64) -> Result<Vec<AutomorphClass>> {
    let n = &system.forms[0];
    collect_classes(system, Side::Left, |nj| reps::automorph_matrices(nj, n, p))
}

/// The unique right class A ∈ ⋃ⱼ R*(q, p²qⱼ)/E(qⱼ) with M⁻¹Ψ_A integral, by
/// scanning all classes.
pub fn find_unique_a(m: &IntMatrix, ternary: &SimilaritySystem, p: i64) -> Result<AutomorphClass> {
    let q = &ternary.forms[0];
    check_prime(q, p)?;
    check_index(m, p)?;
    let classes = ternary_right_classes(ternary, p)?;
    find_in(m, q, &classes, p)
}

fn find_in(m: &IntMatrix, q: &QuadraticForm, classes: &[AutomorphClass], p: i64) -> Result<AutomorphClass> {
    let mut hits = Vec::new();
    for c in classes {
        if divides_left(m, q, &c.rep, p)? {
            hits.push(c.clone());
        }
    }
    match hits.len() {
        1 => Ok(hits.pop().expect("one hit")),
        0 => Err(Error::Verification("Theorem 6.5: no ternary class A with M | Ψ_A".into())),
        _ => Err(Error::Verification("Theorem 6.5: ternary class A with M | Ψ_A is not unique".into())),
    }
}

/// The lattice AZ³ of the class found by following the proof's construction
/// of V₁, V₂ from M = 𝒰𝒟_p, in column Hermite form.
pub fn construct_a_lattice(m: &IntMatrix, q: &QuadraticForm, p: i64) -> Result<SMatrix> {
    check_prime(q, p)?;
    check_index(m, p)?;
    let m = small(m)?;
    let n = crate::clifford::even_norm_form(q)?.matrix;
    if !n.congruence(&m).all_divisible_by(&p) {
        return Err(Error::Invalid("N[M] is not divisible by p".into()));
    }
    // 𝒰 with M·ℤ⁴ = 𝒰·𝒟_p·ℤ⁴: lift an echelon basis of V_p(M), then complete.
    let red: Vec<Vec<i64>> = m.to_cols().iter().map(|c| c.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    let (basis, _) = modp::rref(&red, p);
    if basis.len() != 2 {
        return Err(Error::Invalid("V_p(M) is not two-dimensional".into()));
    }
    let u = complete_to_unimodular(&SMatrix::from_cols(&basis))?;
    let dp = SMatrix::diag(&[1, 1, p, p]);
    if lattice_mod(&u.mul(&dp), &(p * p)) != lattice_mod(&m, &(p * p)) {
        return Err(Error::Verification("𝒰𝒟_p does not span M·ℤ⁴".into()));
    }
    // 𝒲 = ᵗ𝒰⁻¹; a combination of 𝒲₃, 𝒲₄ with first entry ≡ 0 mod p.
    let w = u.adjoint().transpose().scale(&u.det());
    let (w3, w4) = (w.col(2), w.col(3));
    let x: Vec<i64> = if w3[0].rem_euclid(p) == 0 {
        w3
    } else {
        let c = (w4[0] * modp::inv(w3[0].rem_euclid(p), p)).rem_euclid(p);
        w4.iter().zip(&w3).map(|(b, a)| (b - c * a).rem_euclid(p)).collect()
    };
    let xc: Vec<i64> = x[1..].iter().map(|v| v.rem_euclid(p)).collect();
    if xc.iter().all(|&v| v == 0) {
        return Err(Error::Verification("vanishing column X̌".into()));
    }
    // V₁ ≡ X̌ mod p with Q[V₁] ≡ 0 mod p².
    let p2 = p * p;
    let mut v1 = None;
    'search: for y0 in 0..p {
        for y1 in 0..p {
            for y2 in 0..p {
                let c = [xc[0] + p * y0, xc[1] + p * y1, xc[2] + p * y2];
                if q.evaluate(&c).rem_euclid(p2) == 0 {
                    v1 = Some(c.to_vec());
                    break 'search;
                }
            }
        }
    }
    let v1 = v1.ok_or_else(|| Error::Verification("no isotropic lift of X̌ modulo p²".into()))?;
    // V₂ ∈ V₁^⊥ mod p, independent of V₁.
    let row: Vec<i64> = q.gram().mul_vec(&v1).iter().map(|v| v.rem_euclid(p)).collect();
    let v2 = modp::nullspace(&[row], 3, p)
        .into_iter()
        .find(|v| modp::rank(&[v1.iter().map(|x| x.rem_euclid(p)).collect(), v.clone()], p) == 2)
        .ok_or_else(|| Error::Verification("no second column V₂".into()))?;
    let pv2: Vec<i64> = v2.iter().map(|x| p * x).collect();
    let a = lattice_mod(&SMatrix::from_cols(&[v1, pv2]), &p2);
    if a.det().abs() != p * p2 || !q.gram().congruence(&a).all_divisible_by(&p2) {
        return Err(Error::Verification("constructed A is not an automorph with multiplier p²".into()));
    }
    Ok(a)
}

/// Lattice of a matrix in column Hermite form.
pub fn lattice_key(a: &SMatrix) -> Result<SMatrix> {
    column_hnf(a)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountingReport {
    pub p: i64,
    pub chi: i64,
    pub lhs: i64,
    pub quaternary_total: i64,
    pub rhs: Option<i64>,
    pub equal: bool,
}

/// Σᵢ |R*(q,p²qᵢ)/E(qᵢ)| against (1+χ_n)⁻¹ Σⱼ |R(n,pnⱼ)/E(nⱼ)|.
pub fn verify_theorem_6_3(
    ternary: &SimilaritySystem,
    quaternary: &SimilaritySystem,
    p: i64,
) -> Result<CountingReport> {
    let q = &ternary.forms[0];
    check_prime(q, p)?;
    let n = &quaternary.forms[0];
    let chi = character(n, p)?;
    let lhs = ternary_right_classes(ternary, p)?.len() as i64;
    let total = quaternary_right_classes(quaternary, p)?.len() as i64;
    let rhs = if 1 + chi != 0 && total % (1 + chi) == 0 { Some(total / (1 + chi)) } else { None };
    Ok(CountingReport { p, chi, lhs, quaternary_total: total, rhs, equal: rhs == Some(lhs) })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoveringReport {
    pub p: i64,
    pub ternary_classes: usize,
    pub quaternary_classes: usize,
    pub fibers: BTreeMap<String, Vec<String>>,
    pub disjoint: bool,
    pub exhaustive: bool,
    pub fiber_size: Option<usize>,
    pub rank_checks: Vec<usize>,
}

impl CoveringReport {
    /// Every fiber has 1+χ = 2 classes, fibers are disjoint and cover everything.
    pub fn holds(&self) -> bool {
        self.fiber_size == Some(2)
            && self.disjoint
            && self.exhaustive
            && self.quaternary_classes == 2 * self.ternary_classes
            && self.rank_checks.iter().all(|&r| r == 1)
    }
}

/// Fibers {M ∈ ⋃ⱼ E(nⱼ)\R(nⱼ,pn) : Ψ_A M⁻¹ integral} over the ternary left
/// classes A ∈ ⋃ᵢ E(qᵢ)\R*(qᵢ,p²q).
pub fn verify_covering(ternary: &SimilaritySystem, quaternary: &SimilaritySystem, p: i64) -> Result<CoveringReport> {
    let tern = ternary_left_classes(ternary, p)?;
    let quat = quaternary_left_classes(quaternary, p)?;
    let quat_big: Vec<IntMatrix> = quat.iter().map(|c| c.rep.to_big()).collect();
    let rows: Vec<Result<(String, Vec<String>, usize)>> = tern
        .par_iter()
        .map(|a| {
            let psi = psi_lift(&ternary.forms[a.form], &a.rep.to_big(), p)?.psi;
            let fiber: Vec<String> = quat
                .iter()
                .zip(&quat_big)
                .filter(|(_, m)| m.right_divide(&psi).is_some())
                .map(|(c, _)| c.key())
                .collect();
            Ok((a.key(), fiber, rank_mod_p(&psi, p)))
        })
        .collect();
    let mut fibers = BTreeMap::new();
    let mut rank_checks = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut disjoint = true;
    let mut sizes = BTreeSet::new();
    for r in rows {
        let (key, fiber, rank) = r?;
        for f in &fiber {
            disjoint &= seen.insert(f.clone());
        }
        sizes.insert(fiber.len());
        rank_checks.push(rank);
        fibers.insert(key, fiber);
    }
    let fiber_size = if sizes.len() == 1 { sizes.into_iter().next() } else { None };
    Ok(CoveringReport {
        p,
        ternary_classes: tern.len(),
        quaternary_classes: quat.len(),
        fibers,
        disjoint,
        exhaustive: seen.len() == quat.len(),
        fiber_size,
        rank_checks,
    })
}

/// 𝔱*_q(p²)·X = (1+χ_n)⁻¹·X·𝔱_n(p) for each prime.
pub fn intertwiner_check(
    x: &[Vec<BigRational>],
    ternary: &SimilaritySystem,
    quaternary: &SimilaritySystem,
    primes: &[i64],
) -> Result<bool> {
    let (h, hq) = (ternary.h(), quaternary.h());
    if x.len() != h || x.iter().any(|r| r.len() != hq) {
        return Err(Error::DimensionMismatch);
    }
    for &p in primes {
        let t = anzahl_matrix(ternary, p, 2)?;
        let tn = anzahl_matrix(quaternary, p, 1)?;
        let chi = character(&quaternary.forms[0], p)?;
        let lhs = mat_mul(&t.entries, x);
        let scale = BigRational::new(BigInt::one(), BigInt::from(1 + chi));
        let rhs: Vec<Vec<BigRational>> =
            mat_mul(x, &tn.entries).into_iter().map(|r| r.into_iter().map(|v| v * scale.clone()).collect()).collect();
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{quaternary_system, similarity_system};
    use crate::intmat::elementary_divisors;

    fn systems() -> (SimilaritySystem, SimilaritySystem) {
        let t = similarity_system(&QuadraticForm::sum_of_squares(3), &[3, 5, 7]).unwrap();
        let n = quaternary_system(&t, &[3, 5, 7]).unwrap();
        (t, n)
    }

    #[test]
    fn ideal_factor_at_three() {
        let q = QuadraticForm::sum_of_squares(3);
        let all = primitive_automorphs(&q, &q, 9).unwrap();
        assert_eq!(all.len(), 4 * 48);
        for a in all.iter().step_by(17) {
            let f = ideal_extension(&q, a, 3).unwrap();
            assert_eq!(f.index, BigInt::from(9));
            assert_eq!(f.form_f.det(), 16);
            let psi = psi_lift(&q, &a.to_big(), 3).unwrap().psi;
            let x = f.generator.left_divide(&psi).unwrap();
            assert_eq!(x.det().abs(), BigInt::from(9));
            let ed = elementary_divisors(&f.generator).unwrap();
            assert_eq!(ed, [1, 1, 3, 3].map(BigInt::from).to_vec());
            let r = right_ideal_extension(&q, a, 3).unwrap();
            assert_eq!(r.index, BigInt::from(9));
            assert!(r.generator.left_divide(&psi).is_some());
            assert!(divides_left(&f.generator, &q, a, 3).unwrap());
            assert!(divides_left_mod_p(&f.generator, &q, a, 3).unwrap());
        }
        let a = SMatrix::scalar(3, 3);
        assert_eq!(ideal_extension(&q, &a, 3).unwrap_err(), Error::NotPrimitiveAutomorph);
        assert!(divides_left(&IntMatrix::scalar(4, BigInt::from(3)), &q, &a, 3).is_err());
    }

    #[test]
    fn counting_identity() {
        let (t, n) = systems();
        for p in [3, 5, 7] {
            let r = verify_theorem_6_3(&t, &n, p).unwrap();
            assert_eq!(r.lhs, p + 1);
            assert_eq!(r.rhs, Some(p + 1));
            assert!(r.equal);
        }
    }

    #[test]
    fn covering_at_three() {
        let (t, n) = systems();
        let r = verify_covering(&t, &n, 3).unwrap();
        assert_eq!(r.ternary_classes, 4);
        assert_eq!(r.quaternary_classes, 8);
        assert!(r.holds());
    }

    #[test]
    fn unique_a_and_constructive_oracle() {
        let (t, n) = systems();
        let q = &t.forms[0];
        for m in quaternary_right_classes(&n, 3).unwrap() {
            let big = m.rep.to_big();
            let a = find_unique_a(&big, &t, 3).unwrap();
            let built = construct_a_lattice(&big, q, 3).unwrap();
            assert_eq!(lattice_key(&a.rep).unwrap(), built);
        }
        // M = 𝓘_A recovers the class of A.
        for c in ternary_right_classes(&t, 3).unwrap() {
            let f = ideal_extension(q, &c.rep, 3).unwrap();
            assert_eq!(find_unique_a(&f.generator, &t, 3).unwrap(), c);
        }
    }

    #[test]
    fn upsilon_divides_and_injects() {
        let (t, n) = systems();
        let q = &t.forms[0];
        let mut keys = BTreeSet::new();
        for c in ternary_left_classes(&t, 3).unwrap() {
            let u = upsilon(q, &c.rep, 3).unwrap();
            let psi = psi_lift(q, &c.rep.to_big(), 3).unwrap().psi;
            assert!(u.right_divide(&psi).is_some());
            let nq = n.forms[0].gram().to_big();
            let f = nq.congruence(&scaled_inverse(&u, &BigInt::from(3)).unwrap());
            assert!(f.all_divisible_by(&BigInt::from(3)));
            keys.insert(column_hnf(&u.transpose()).unwrap());
        }
        assert_eq!(keys.len(), 4);
    }

    #[test]
    fn intertwiners() {
        let (t, n) = systems();
        let one = BigRational::one();
        assert!(intertwiner_check(&[vec![one.clone()]], &t, &n, &[3, 5]).unwrap());
        assert!(intertwiner_check(&[vec![one.clone(), one]], &t, &n, &[3]).is_err());
    }
}
