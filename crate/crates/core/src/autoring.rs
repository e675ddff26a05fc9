//! The automorph class ring: formal sums of left cosets ⟨A⟩, their products,
//! the action on orbit vectors ℜ(a) of representations, the coefficient map π,
//! and the orbit-level commutation relations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::classes::{primitive_automorphs, SimilaritySystem};
use crate::intmat::SMatrix;
use crate::qform::{character, epsilon, local_constants};
use crate::reps::{self, canonical_coset_rep, orbit_rep, Side};
use crate::{Error, Result};

/// Σ c_A⟨A⟩ with A running over left cosets E(qᵢ)\⋃ₐR(qᵢ, a qⱼ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetSum {
    pub source: usize,
    pub target: usize,
    pub terms: BTreeMap<SMatrix, i64>,
}

impl CosetSum {
    pub fn zero(source: usize, target: usize) -> Self {
        CosetSum { source, target, terms: BTreeMap::new() }
    }

    /// ⟨A⟩ with A canonicalized.
    pub fn single(system: &SimilaritySystem, source: usize, target: usize, a: &SMatrix) -> Self {
        let mut s = Self::zero(source, target);
        s.add_term(system, a, 1);
        s
    }

    fn add_term(&mut self, system: &SimilaritySystem, a: &SMatrix, c: i64) {
        let key = canonical_coset_rep(a, &system.unit_groups[self.source], Side::Left);
        let e = self.terms.entry(key).or_insert(0);
        *e += c;
        if *e == 0 {
            let key = canonical_coset_rep(a, &system.unit_groups[self.source], Side::Left);
            self.terms.remove(&key);
        }
    }

    /// π: the sum of coefficients.
    pub fn pi(&self) -> i64 {
        self.terms.values().sum()
    }
}

/// An h×h matrix of coset sums.
pub type RingElement = Vec<Vec<CosetSum>>;

/// Σ a_α b_β ⟨A_α B_β⟩.
pub fn multiply(system: &SimilaritySystem, x: &CosetSum, y: &CosetSum) -> Result<CosetSum> {
    if x.target != y.source {
        return Err(Error::IndexMismatch);
    }
    let mut out = CosetSum::zero(x.source, y.target);
    for (a, ca) in &x.terms {
        for (b, cb) in &y.terms {
            out.add_term(system, &a.mul(b), ca * cb);
        }
    }
    Ok(out)
}

pub fn add(x: &CosetSum, y: &CosetSum) -> Result<CosetSum> {
    if x.source != y.source || x.target != y.target {
        return Err(Error::IndexMismatch);
    }
    let mut out = x.clone();
    for (k, c) in &y.terms {
        let e = out.terms.entry(k.clone()).or_insert(0);
        *e += c;
        if *e == 0 {
            out.terms.remove(k);
        }
    }
    Ok(out)
}

/// Matrix product in the ring.
pub fn multiply_elements(system: &SimilaritySystem, x: &RingElement, y: &RingElement) -> Result<RingElement> {
    let h = system.h();
    let mut out = Vec::with_capacity(h);
    for i in 0..h {
        let mut row = Vec::with_capacity(h);
        for k in 0..h {
            let mut acc = CosetSum::zero(i, k);
            for j in 0..h {
                acc = add(&acc, &multiply(system, &x[i][j], &y[j][k])?)?;
            }
            row.push(acc);
        }
        out.push(row);
    }
    Ok(out)
}

/// 𝔗*(p^ι): entry (i,j) is the sum of ⟨D⟩ over E(qᵢ)\R*(qᵢ, p^ι qⱼ).
pub fn t_star(system: &SimilaritySystem, p: i64, iota: u32) -> Result<RingElement> {
    let q = &system.seed;
    if p == 2 {
        return Err(Error::EvenPrime);
    }
    if q.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    let a = p.pow(iota);
    let h = system.h();
    let mut out = Vec::with_capacity(h);
    for i in 0..h {
        let mut row = Vec::with_capacity(h);
        for j in 0..h {
            let mats = primitive_automorphs(&system.forms[i], &system.forms[j], a)?;
            let cl = reps::coset_decompose_matrices(&mats, &system.unit_groups[i], Side::Left);
            let terms = cl.representatives.into_iter().map(|r| (r, 1)).collect();
            row.push(CosetSum { source: i, target: j, terms });
        }
        out.push(row);
    }
    Ok(out)
}

/// diag(⟨s·1_m⟩, …), written [s].
pub fn scalar_element(system: &SimilaritySystem, s: i64) -> RingElement {
    let m = system.seed.m();
    let h = system.h();
    (0..h)
        .map(|i| {
            (0..h)
                .map(
                    |j| {
                        if i == j {
                            CosetSum::single(system, i, i, &SMatrix::scalar(m, s))
                        } else {
                            CosetSum::zero(i, j)
                        }
                    },
                )
                .collect()
        })
        .collect()
}

pub fn identity_element(system: &SimilaritySystem) -> RingElement {
    scalar_element(system, 1)
}

/// π applied entrywise.
pub fn pi_element(x: &RingElement) -> Vec<Vec<i64>> {
    x.iter().map(|row| row.iter().map(|c| c.pi()).collect()).collect()
}

/// Per class j, orbit keys ⟨L⟩ (least element of E(qⱼ)L) with rational weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepVector {
    pub components: Vec<BTreeMap<Vec<i64>, BigRational>>,
}

impl RepVector {
    pub fn zero(h: usize) -> Self {
        RepVector { components: vec![BTreeMap::new(); h] }
    }

    fn add_term(&mut self, j: usize, key: Vec<i64>, c: BigRational) {
        let e = self.components[j].entry(key.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.components[j].remove(&key);
        }
    }

    pub fn add(&self, other: &RepVector) -> RepVector {
        let mut out = self.clone();
        for (j, comp) in other.components.iter().enumerate() {
            for (k, c) in comp {
                out.add_term(j, k.clone(), c.clone());
            }
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> RepVector {
        let mut out = RepVector::zero(self.components.len());
        if s.is_zero() {
            return out;
        }
        for (j, comp) in self.components.iter().enumerate() {
            for (k, c) in comp {
                out.components[j].insert(k.clone(), c * s);
            }
        }
        out
    }

    /// π: per-class sums of weights.
    pub fn pi(&self) -> Vec<BigRational> {
        self.components.iter().map(|c| c.values().sum()).collect()
    }
}

/// ℜ(a): each orbit of R(qⱼ, a) weighted by the inverse stabilizer order.
pub fn rep_vector(system: &SimilaritySystem, a: i64) -> Result<RepVector> {
    let mut out = RepVector::zero(system.h());
    if a < 0 {
        return Ok(out);
    }
    for (j, f) in system.forms.iter().enumerate() {
        let e = &system.unit_groups[j];
        let reps = reps::representations(f, a)?;
        for o in reps::orbits(&reps, e) {
            let stab = (e.order() / o.size) as i64;
            out.components[j].insert(o.rep, BigRational::new(BigInt::one(), BigInt::from(stab)));
        }
    }
    Ok(out)
}

/// Bilinear extension of ⟨A⟩·⟨L⟩ = ⟨AL⟩.
pub fn act(system: &SimilaritySystem, x: &RingElement, v: &RepVector) -> Result<RepVector> {
    if !system.seed.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let h = system.h();
    if x.len() != h || v.components.len() != h {
        return Err(Error::DimensionMismatch);
    }
    let mut out = RepVector::zero(h);
    for (i, row) in x.iter().enumerate() {
        let e = &system.unit_groups[i];
        for (j, sum) in row.iter().enumerate() {
            for (a, ca) in &sum.terms {
                for (l, cl) in &v.components[j] {
                    let key = orbit_rep(&a.mul_vec(l), e);
                    out.add_term(i, key, cl * BigRational::from_integer(BigInt::from(*ca)));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommutationReport {
    pub p: i64,
    pub a_max: i64,
    pub failures: Vec<i64>,
    pub holds: bool,
}

/// The orbit-level relation for each 1 ≤ a ≤ a_max, as an equality of
/// orbit vectors:
/// m = 2k:   ℜ(pa) + χp^{k−1}[p]ℜ(a/p) = c_p⁻¹𝔗*(p)ℜ(a)
/// m = 2k+1: ℜ(p²a) + χp^{k−1}(2a/p)[p]ℜ(a) + p^{m−2}[p²]ℜ(a/p²) = c_p⁻¹(𝔗*(p²) − β_p)ℜ(a)
pub fn verify_commutation(system: &SimilaritySystem, p: i64, a_max: i64) -> Result<CommutationReport> {
    let q = &system.seed;
    let m = q.m();
    let k = q.k() as u32;
    let lc = local_constants(q, p)?;
    let chi = character(q, p)?;
    let iota = if m % 2 == 0 { 1 } else { 2 };
    let t = t_star(system, p, iota)?;
    let sp = scalar_element(system, p);
    let sp2 = scalar_element(system, p * p);
    let cinv = BigRational::one() / lc.c.clone();
    let beta = lc.beta.clone().unwrap_or_else(BigRational::zero);
    let rat = |n: i64| BigRational::from_integer(BigInt::from(n));
    let mut failures = Vec::new();
    for a in 1..=a_max {
        let ra = rep_vector(system, a)?;
        let (lhs, rhs) = if m % 2 == 0 {
            let mut lhs = rep_vector(system, p * a)?;
            if a % p == 0 {
                let lower = act(system, &sp, &rep_vector(system, a / p)?)?;
                lhs = lhs.add(&lower.scale(&rat(chi * p.pow(k - 1))));
            }
            (lhs, act(system, &t, &ra)?.scale(&cinv))
        } else {
            let mut lhs = rep_vector(system, p * p * a)?;
            let mid = act(system, &sp, &ra)?;
            lhs = lhs.add(&mid.scale(&rat(chi * epsilon(a, p) * p.pow(k - 1))));
            if a % (p * p) == 0 {
                let lower = act(system, &sp2, &rep_vector(system, a / (p * p))?)?;
                lhs = lhs.add(&lower.scale(&rat(p.pow(m as u32 - 2))));
            }
            let rhs = act(system, &t, &ra)?.add(&ra.scale(&-beta.clone())).scale(&cinv);
            (lhs, rhs)
        };
        if lhs != rhs {
            failures.push(a);
        }
    }
    Ok(CommutationReport { p, a_max, holds: failures.is_empty(), failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{anzahl_matrix, quaternary_system, similarity_system};
    use crate::qform::QuadraticForm;

    fn three() -> SimilaritySystem {
        similarity_system(&QuadraticForm::sum_of_squares(3), &[3, 5, 7]).unwrap()
    }

    #[test]
    fn ring_basics() {
        let s = three();
        let t = t_star(&s, 3, 2).unwrap();
        assert_eq!(t[0][0].terms.len(), 4);
        let one = identity_element(&s);
        assert_eq!(multiply_elements(&s, &one, &t).unwrap(), t);
        let p = scalar_element(&s, 3);
        assert_eq!(multiply_elements(&s, &p, &p).unwrap(), scalar_element(&s, 9));
        assert_eq!(pi_element(&t), vec![vec![4]]);
        let an = anzahl_matrix(&s, 3, 2).unwrap();
        assert_eq!(an.entries[0][0], BigRational::from_integer(BigInt::from(4)));
        let n = quaternary_system(&s, &[3, 5, 7]).unwrap();
        assert_eq!(t_star(&n, 3, 1).unwrap()[0][0].terms.len(), 8);
    }

    #[test]
    fn distinct_primes_commute() {
        let s = three();
        let t3 = t_star(&s, 3, 2).unwrap();
        let t5 = t_star(&s, 5, 2).unwrap();
        let a = multiply_elements(&s, &t3, &t5).unwrap();
        let b = multiply_elements(&s, &t5, &t3).unwrap();
        assert_eq!(a, b);
        assert_eq!(pi_element(&a), vec![vec![24]]);
        let r1 = rep_vector(&s, 1).unwrap();
        let lhs = act(&s, &a, &r1).unwrap();
        let rhs = act(&s, &t3, &act(&s, &t5, &r1).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn rep_vectors() {
        let s = three();
        let r = rep_vector(&s, 9).unwrap();
        assert_eq!(r.components[0].len(), 2);
        assert_eq!(r.pi(), vec![BigRational::new(BigInt::from(30), BigInt::from(48))]);
        let one = identity_element(&s);
        assert_eq!(act(&s, &one, &r).unwrap(), r);
    }

    #[test]
    fn commutation_relations() {
        let s = three();
        assert!(verify_commutation(&s, 3, 20).unwrap().holds);
        let n = quaternary_system(&s, &[3, 5, 7]).unwrap();
        assert!(verify_commutation(&n, 3, 12).unwrap().holds);
        let g = similarity_system(&QuadraticForm::diagonal(&[1, 1, 16]).unwrap(), &[3, 5]).unwrap();
        assert!(g.h() >= 2);
        assert!(verify_commutation(&g, 3, 12).unwrap().holds);
        assert!(verify_commutation(&g, 5, 6).unwrap().holds);
    }
}
