//! Similarity-class representative systems, integral equivalence and
//! Eichler's Anzahlmatrizen.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::intmat::{elementary_divisors, SMatrix};
use crate::isosum;
use crate::qform::{self, FormDescriptor, QuadraticForm};
use crate::reps::{self, Side, UnitGroup};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SimilaritySystem {
    pub seed: QuadraticForm,
    pub forms: Vec<QuadraticForm>,
    pub unit_groups: Vec<Arc<UnitGroup>>,
    pub primes_used: Vec<i64>,
}

/// JSON system descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SystemDescriptor {
    pub seed: FormDescriptor,
    pub forms: Vec<FormDescriptor>,
    pub unit_orders: Vec<usize>,
    pub primes_used: Vec<i64>,
}

impl SimilaritySystem {
    pub fn h(&self) -> usize {
        self.forms.len()
    }

    pub fn unit_order(&self, i: usize) -> usize {
        self.unit_groups[i].order()
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor {
            seed: self.seed.descriptor(),
            forms: self.forms.iter().map(|f| f.descriptor()).collect(),
            unit_orders: self.unit_groups.iter().map(|g| g.order()).collect(),
            primes_used: self.primes_used.clone(),
        }
    }

    /// Index of the representative equivalent to `f`.
    pub fn class_of(&self, f: &QuadraticForm) -> Result<Option<usize>> {
        for (i, g) in self.forms.iter().enumerate() {
            if is_equivalent(g, f)?.is_some() {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

/// Eichler's matrix of class counts r*(qᵢ, p^ι qⱼ)/e(qᵢ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnzahlMatrix {
    pub p: i64,
    pub iota: u32,
    pub entries: Vec<Vec<BigRational>>,
}

impl AnzahlMatrix {
    pub fn h(&self) -> usize {
        self.entries.len()
    }

    pub fn mul(&self, other: &AnzahlMatrix) -> Vec<Vec<BigRational>> {
        mat_mul(&self.entries, &other.entries)
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[BigRational]) -> Vec<BigRational> {
        let h = self.h();
        (0..h).map(|j| (0..h).map(|i| v[i].clone() * self.entries[i][j].clone()).sum()).collect()
    }

    /// Matrix times column vector.
    pub fn apply(&self, v: &[BigRational]) -> Vec<BigRational> {
        self.entries.iter().map(|row| row.iter().zip(v).map(|(a, b)| a.clone() * b.clone()).sum()).collect()
    }
}

pub fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    let k = b.len();
    let m = b.first().map_or(0, |r| r.len());
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t].clone() * b[t][j].clone()).sum()).collect()).collect()
}

/// Some unimodular U with Q[U] = Q′: the identity when the Gram matrices
/// agree, otherwise the least such U in lexicographic order.
pub fn is_equivalent(q: &QuadraticForm, target: &QuadraticForm) -> Result<Option<SMatrix>> {
    if q.m() != target.m() {
        return Err(Error::DimensionMismatch);
    }
    if !q.is_positive_definite() || !target.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    if q.det() != target.det() {
        return Ok(None);
    }
    if q.gram() == target.gram() {
        return Ok(Some(SMatrix::identity(q.m())));
    }
    Ok(reps::automorph_matrices(q, target, 1)?.into_iter().next())
}

/// Pairwise size reduction of a positive definite Gram matrix: returns the
/// reduced form and U with Q[U] equal to it.
pub fn reduce_form(q: &QuadraticForm) -> Result<(QuadraticForm, SMatrix)> {
    if !q.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let m = q.m();
    let mut u = SMatrix::identity(m);
    let mut g = q.gram().clone();
    loop {
        let mut changed = false;
        // Sort basis by norm.
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&i| (*g.get(i, i), i));
        if order.iter().enumerate().any(|(a, &b)| a != b) {
            let mut perm = SMatrix::zeros(m, m);
            for (new, &old) in order.iter().enumerate() {
                perm.set(old, new, 1);
            }
            u = u.mul(&perm);
            g = g.congruence(&perm);
        }
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    continue;
                }
                let gii = *g.get(i, i);
                let gij = *g.get(i, j);
                if 2 * gij.abs() > gii {
                    // b_j ← b_j − r·b_i with r the nearest integer to gij/gii.
                    let r = (2 * gij + gii).div_euclid(2 * gii);
                    let mut e = SMatrix::identity(m);
                    e.set(i, j, -r);
                    u = u.mul(&e);
                    g = g.congruence(&e);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut sign = SMatrix::identity(m);
    for j in 1..m {
        if *g.get(0, j) < 0 {
            sign.set(j, j, -1);
        }
    }
    u = u.mul(&sign);
    g = g.congruence(&sign);
    Ok((QuadraticForm::from_gram(&g)?, u))
}

/// The three smallest odd primes not dividing det q.
pub fn default_primes(q: &QuadraticForm) -> Vec<i64> {
    qform::odd_primes_upto(1000).into_iter().filter(|p| q.det() % p != 0).take(3).collect()
}

/// Neighbors p^{−ι}·q[M] over the isotropic cosets M, reduced.
pub fn neighbors(q: &QuadraticForm, p: i64) -> Result<Vec<QuadraticForm>> {
    let m = q.m();
    let (cosets, scale) = if m % 2 == 1 {
        let mut all = Vec::new();
        for d in 1..=(m - 1) / 2 {
            all.extend(isosum::isotropic_cosets(q, d, p)?.iter().cloned());
        }
        (all, p * p)
    } else {
        (isosum::isotropic_cosets_p(q, p)?, p)
    };
    let mut out = Vec::new();
    for c in cosets {
        let g = q.gram().congruence(&c).div_exact(&scale).ok_or(Error::Inconsistent)?;
        let f = QuadraticForm::from_gram(&g)?;
        let (r, _) = reduce_form(&f)?;
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out.sort_by_key(|f: &QuadraticForm| f.key());
    Ok(out)
}

struct Closure {
    forms: Vec<QuadraticForm>,
    invariants: Vec<Vec<u64>>,
}

impl Closure {
    fn invariant(f: &QuadraticForm) -> Result<Vec<u64>> {
        let bound = (0..f.m()).map(|i| f.gram().get(i, i) / 2).max().unwrap_or(1).max(1) * 2;
        reps::representation_counts(f, bound)
    }

    /// Adds `f` unless an equivalent form is present; returns whether it was new.
    fn insert(&mut self, f: QuadraticForm) -> Result<bool> {
        let inv = Self::invariant(&f)?;
        for (g, ig) in self.forms.iter().zip(&self.invariants) {
            let n = inv.len().min(ig.len());
            if inv[..n] == ig[..n] && is_equivalent(g, &f)?.is_some() {
                return Ok(false);
            }
        }
        self.forms.push(f);
        self.invariants.push(inv);
        Ok(true)
    }
}

/// Closure of `seeds` under neighbor steps at the given primes. Seeds keep
/// their order at the front (inequivalent ones only); later classes are
/// sorted by key. The result is complete only relative to the prime set.
pub fn similarity_system_seeded(seeds: &[QuadraticForm], primes: &[i64]) -> Result<SimilaritySystem> {
    let seed = seeds.first().ok_or_else(|| Error::Invalid("no seed form".into()))?.clone();
    for s in seeds {
        if !s.is_positive_definite() {
            return Err(Error::NotPositiveDefinite);
        }
        if s.det() != seed.det() || s.m() != seed.m() {
            return Err(Error::DeterminantMismatch);
        }
    }
    for &p in primes {
        if p == 2 {
            return Err(Error::EvenPrime);
        }
        if seed.det() % p == 0 {
            return Err(Error::SingularPrime(p));
        }
    }
    let mut cl = Closure { forms: Vec::new(), invariants: Vec::new() };
    for s in seeds {
        cl.insert(s.clone())?;
    }
    let n_seeded = cl.forms.len();
    let mut next = 0;
    while next < cl.forms.len() {
        let f = cl.forms[next].clone();
        for &p in primes {
            for g in neighbors(&f, p)? {
                cl.insert(g)?;
            }
        }
        next += 1;
    }
    let mut forms = cl.forms;
    forms[n_seeded..].sort_by_key(|f| f.key());
    let unit_groups = forms.iter().map(reps::unit_group).collect::<Result<Vec<_>>>()?;
    Ok(SimilaritySystem { seed, forms, unit_groups, primes_used: primes.to_vec() })
}

pub fn similarity_system(q: &QuadraticForm, primes: &[i64]) -> Result<SimilaritySystem> {
    similarity_system_seeded(std::slice::from_ref(q), primes)
}

/// The quaternary system whose first members are the even Clifford norm forms
/// of the ternary representatives.
pub fn quaternary_system(ternary: &SimilaritySystem, primes: &[i64]) -> Result<SimilaritySystem> {
    let seeds = ternary.forms.iter().map(crate::clifford::norm_form).collect::<Result<Vec<_>>>()?;
    similarity_system_seeded(&seeds, primes)
}

fn iota_for(m: usize) -> u32 {
    if m % 2 == 0 {
        1
    } else {
        2
    }
}

/// R*(qᵢ, p^ι qⱼ) as matrices, sorted.
pub fn primitive_automorphs(qi: &QuadraticForm, qj: &QuadraticForm, a: i64) -> Result<Vec<SMatrix>> {
    Ok(reps::automorph_matrices(qi, qj, a)?.into_iter().filter(|m| m.content() == 1).collect())
}

pub fn anzahl_matrix(system: &SimilaritySystem, p: i64, iota: u32) -> Result<AnzahlMatrix> {
    let m = system.seed.m();
    if p == 2 {
        return Err(Error::EvenPrime);
    }
    if system.seed.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    if iota != iota_for(m) {
        return Err(Error::Invalid(format!("iota must be {} for m = {m}", iota_for(m))));
    }
    let a = p.pow(iota);
    let h = system.h();
    let mut entries = vec![vec![BigRational::zero(); h]; h];
    for i in 0..h {
        for j in 0..h {
            let n = primitive_automorphs(&system.forms[i], &system.forms[j], a)?.len();
            entries[i][j] = BigRational::new(BigInt::from(n), BigInt::from(system.unit_order(i)));
        }
    }
    Ok(AnzahlMatrix { p, iota, entries })
}

/// Σᵢ #{M ∈ (R(q, p²qᵢ) ∩ Λ D_p(d) Λ)/E(qᵢ) : M | K}, the class-side form of the
/// isotropic sum.
pub fn class_side_isotropic_sum(
    system: &SimilaritySystem,
    q: &QuadraticForm,
    d: usize,
    k: &[i64],
    p: i64,
) -> Result<i64> {
    let m = q.m();
    let mut want = vec![1i64; d];
    want.extend(std::iter::repeat_n(p, m - 2 * d));
    want.extend(std::iter::repeat_n(p * p, d));
    let mut total = 0;
    for (qi, e) in system.forms.iter().zip(&system.unit_groups) {
        let mats: Vec<SMatrix> = reps::automorph_matrices(q, qi, p * p)?
            .into_iter()
            .filter(|a| elementary_divisors(a).map(|v| v == want).unwrap_or(false))
            .collect();
        let cl = reps::coset_decompose_matrices(&mats, e, Side::Right);
        total += cl.representatives.iter().filter(|a| isosum::divides_column(a, k)).count() as i64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn equivalence_examples() {
        let q = QuadraticForm::sum_of_squares(3);
        assert_eq!(is_equivalent(&q, &q).unwrap(), Some(SMatrix::identity(3)));
        let a = QuadraticForm::diagonal(&[1, 1, 2]).unwrap();
        let b = QuadraticForm::diagonal(&[1, 2, 1]).unwrap();
        let u = is_equivalent(&a, &b).unwrap().unwrap();
        assert_eq!(a.gram().congruence(&u), *b.gram());
        assert!(u.is_unimodular());
        let c = QuadraticForm::diagonal(&[1, 1, 3]).unwrap();
        assert_eq!(is_equivalent(&a, &c).unwrap(), None);
        let ind = QuadraticForm::diagonal(&[1, -1, 1]).unwrap();
        assert_eq!(is_equivalent(&ind, &ind).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn reduction_preserves_class() {
        let q = QuadraticForm::new(3, &[vec![5, 7, 3], vec![4, 5], vec![9]]).unwrap();
        let (r, u) = reduce_form(&q).unwrap();
        assert_eq!(q.gram().congruence(&u), *r.gram());
        assert!(u.is_unimodular());
        assert!(is_equivalent(&q, &r).unwrap().is_some());
    }

    #[test]
    fn class_numbers_one() {
        let q = QuadraticForm::sum_of_squares(3);
        let sys = similarity_system(&q, &[3]).unwrap();
        assert_eq!(sys.h(), 1);
        assert_eq!(sys.unit_order(0), 48);
        let n = QuadraticForm::sum_of_squares(4);
        let sys4 = similarity_system(&n, &[3]).unwrap();
        assert_eq!(sys4.h(), 1);
    }

    #[test]
    fn larger_class_number() {
        let q = QuadraticForm::diagonal(&[1, 1, 16]).unwrap();
        let sys = similarity_system(&q, &default_primes(&q)).unwrap();
        assert!(sys.h() >= 2);
        for i in 0..sys.h() {
            assert_eq!(sys.forms[i].det(), q.det());
            for j in 0..i {
                assert!(is_equivalent(&sys.forms[i], &sys.forms[j]).unwrap().is_none());
            }
        }
    }

    #[test]
    fn anzahl_examples() {
        let q = QuadraticForm::sum_of_squares(3);
        let sys = similarity_system(&q, &[3]).unwrap();
        assert_eq!(anzahl_matrix(&sys, 3, 2).unwrap().entries, vec![vec![rat(4)]]);
        assert!(anzahl_matrix(&sys, 3, 1).is_err());
        let n = QuadraticForm::sum_of_squares(4);
        let sys4 = similarity_system(&n, &[3]).unwrap();
        assert_eq!(anzahl_matrix(&sys4, 3, 1).unwrap().entries, vec![vec![rat(8)]]);
    }

    #[test]
    fn class_side_matches_brute() {
        let q = QuadraticForm::sum_of_squares(3);
        let sys = similarity_system(&q, &[3]).unwrap();
        for (_, k) in isosum::stratum_samples(&q, 3) {
            assert_eq!(
                class_side_isotropic_sum(&sys, &q, 1, &k, 3).unwrap(),
                isosum::brute_isotropic_sum_p2(&q, 1, &k, 3).unwrap()
            );
        }
    }
}
