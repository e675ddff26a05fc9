//! Theta-series coefficients, the Hecke maps T(p) and T(p²) on coefficient
//! lists, Eichler's commutation relation, generic theta-series, and truncated
//! Euler-product expansions.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::classes::{anzahl_matrix, SimilaritySystem};
use crate::qform::{character, epsilon, is_prime, jacobi, local_constants, QuadraticForm};
use crate::reps;
use crate::{Error, Result};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn frac(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// r(q,0), …, r(q,n_max).
pub fn theta_coeffs(q: &QuadraticForm, n_max: i64) -> Result<Vec<i64>> {
    Ok(reps::representation_counts(q, n_max)?.into_iter().map(|c| c as i64).collect())
}

fn check_prime(q: &QuadraticForm, p: i64) -> Result<()> {
    if p == 2 {
        return Err(Error::EvenPrime);
    }
    if !is_prime(p) {
        return Err(Error::Invalid(format!("{p} is not prime")));
    }
    if q.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    Ok(())
}

/// n-th coefficient of Θ|T(p²) for odd m, from a coefficient list reaching p²n.
fn tp2_coeff(r: &[i64], q: &QuadraticForm, chi: i64, p: i64, n: i64) -> i64 {
    let k = (q.m() / 2) as u32;
    let mut v = r[(p * p * n) as usize] + chi * epsilon(n, p) * p.pow(k - 1) * r[n as usize];
    if n % (p * p) == 0 {
        v += p.pow(q.m() as u32 - 2) * r[(n / (p * p)) as usize];
    }
    v
}

/// n-th coefficient of Θ|T(p) for even m = 2k.
fn tp_coeff(r: &[i64], q: &QuadraticForm, chi: i64, p: i64, n: i64) -> i64 {
    let k = (q.m() / 2) as u32;
    let mut v = r[(p * n) as usize];
    if n % p == 0 {
        v += chi * p.pow(k - 1) * r[(n / p) as usize];
    }
    v
}

/// Coefficients 0..n_max of Θ(z,q)|T(p²), m odd.
pub fn hecke_tp2(q: &QuadraticForm, p: i64, n_max: i64) -> Result<Vec<i64>> {
    if q.m() % 2 == 0 {
        return Err(Error::Invalid("T(p²) acts on odd m; use T(p) for even m".into()));
    }
    check_prime(q, p)?;
    let r = theta_coeffs(q, p * p * n_max)?;
    let chi = character(q, p)?;
    Ok((0..=n_max).map(|n| tp2_coeff(&r, q, chi, p, n)).collect())
}

/// Coefficients 0..n_max of Θ(z,q)|T(p), m even.
pub fn hecke_tp(q: &QuadraticForm, p: i64, n_max: i64) -> Result<Vec<i64>> {
    if q.m() % 2 == 1 {
        return Err(Error::Invalid("T(p) acts on even m; use T(p²) for odd m".into()));
    }
    check_prime(q, p)?;
    let r = theta_coeffs(q, p * n_max)?;
    let chi = character(q, p)?;
    Ok((0..=n_max).map(|n| tp_coeff(&r, q, chi, p, n)).collect())
}

/// The h-vector 𝔯(n) = (r(qⱼ,n)/e(qⱼ))ⱼ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffVector {
    pub n: i64,
    pub values: Vec<BigRational>,
}

/// 𝔯(0), …, 𝔯(n_max) for a system.
pub fn coeff_vectors(system: &SimilaritySystem, n_max: i64) -> Result<Vec<CoeffVector>> {
    let counts: Vec<Vec<i64>> = system.forms.par_iter().map(|f| theta_coeffs(f, n_max)).collect::<Result<_>>()?;
    Ok((0..=n_max)
        .map(|n| CoeffVector {
            n,
            values: counts.iter().enumerate().map(|(j, c)| frac(c[n as usize], system.unit_order(j) as i64)).collect(),
        })
        .collect())
}

fn iota(m: usize) -> u32 {
    if m % 2 == 0 {
        1
    } else {
        2
    }
}

/// c_p⁻¹(𝔱*(p^ι) − β_p·1) with rows acting on column vectors 𝔯.
fn hecke_matrix(system: &SimilaritySystem, p: i64) -> Result<Vec<Vec<BigRational>>> {
    let m = system.seed.m();
    let t = anzahl_matrix(system, p, iota(m))?;
    let lc = local_constants(&system.seed, p)?;
    let beta = lc.beta.unwrap_or_else(BigRational::zero);
    let h = system.h();
    Ok((0..h)
        .map(|i| {
            (0..h)
                .map(|j| {
                    let mut v = t.entries[i][j].clone();
                    if i == j {
                        v -= beta.clone();
                    }
                    v / lc.c.clone()
                })
                .collect()
        })
        .collect())
}

fn apply(a: &[Vec<BigRational>], v: &[BigRational]) -> Vec<BigRational> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn mat_mul(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    crate::classes::mat_mul(a, b)
}

fn identity(h: usize) -> Vec<Vec<BigRational>> {
    (0..h).map(|i| (0..h).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect()).collect()
}

fn lin(a: &[Vec<BigRational>], sa: &BigRational, b: &[Vec<BigRational>], sb: &BigRational) -> Vec<Vec<BigRational>> {
    a.iter().zip(b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x * sa + y * sb).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EichlerReport {
    pub p: i64,
    pub iota: u32,
    pub n_max: i64,
    pub first_failure: Option<i64>,
    pub holds: bool,
}

/// For n ≤ n_max: the Hecke image of (Θ(qⱼ)/e(qⱼ))ⱼ at n equals
/// c_p⁻¹(𝔱*(p^ι) − β_p·1)·𝔯(n).
pub fn verify_eichler(system: &SimilaritySystem, p: i64, n_max: i64) -> Result<EichlerReport> {
    let q = &system.seed;
    check_prime(q, p)?;
    let m = q.m();
    let io = iota(m);
    let a = hecke_matrix(system, p)?;
    let bound = p.pow(io) * n_max;
    let counts: Vec<Vec<i64>> = system.forms.par_iter().map(|f| theta_coeffs(f, bound)).collect::<Result<_>>()?;
    let chis: Vec<i64> = system.forms.iter().map(|f| character(f, p)).collect::<Result<_>>()?;
    let e: Vec<i64> = (0..system.h()).map(|j| system.unit_order(j) as i64).collect();
    let first_failure = (0..=n_max).find(|&n| {
        let lhs: Vec<BigRational> = (0..system.h())
            .map(|j| {
                let c = if m % 2 == 1 {
                    tp2_coeff(&counts[j], &system.forms[j], chis[j], p, n)
                } else {
                    tp_coeff(&counts[j], &system.forms[j], chis[j], p, n)
                };
                frac(c, e[j])
            })
            .collect();
        let v: Vec<BigRational> = (0..system.h()).map(|j| frac(counts[j][n as usize], e[j])).collect();
        lhs != apply(&a, &v)
    });
    Ok(EichlerReport { p, iota: io, n_max, first_failure, holds: first_failure.is_none() })
}

/// Σⱼ r(qⱼ,n)/e(qⱼ) for n = 0..n_max.
pub fn generic_theta(system: &SimilaritySystem, n_max: i64) -> Result<Vec<BigRational>> {
    Ok(coeff_vectors(system, n_max)?.into_iter().map(|v| v.values.into_iter().sum()).collect())
}

/// The Hecke image of the generic theta-series, coefficients 0..n_max.
pub fn generic_hecke(system: &SimilaritySystem, p: i64, n_max: i64) -> Result<Vec<BigRational>> {
    let m = system.seed.m();
    let mut out = vec![BigRational::zero(); (n_max + 1) as usize];
    for (j, f) in system.forms.iter().enumerate() {
        let c = if m % 2 == 1 { hecke_tp2(f, p, n_max)? } else { hecke_tp(f, p, n_max)? };
        let e = system.unit_order(j) as i64;
        for (o, v) in out.iter_mut().zip(c) {
            *o += frac(v, e);
        }
    }
    Ok(out)
}

/// λ with generic_hecke = λ·generic_theta on 0..n_max, if such λ exists.
pub fn generic_eigenvalue(system: &SimilaritySystem, p: i64, n_max: i64) -> Result<Option<BigRational>> {
    let g = generic_theta(system, n_max)?;
    let t = generic_hecke(system, p, n_max)?;
    let lambda = t[0].clone() / g[0].clone();
    Ok(g.iter().zip(&t).all(|(a, b)| a * &lambda == *b).then_some(lambda))
}

/// c_p⁻¹(Σⱼ𝔱*ᵢⱼ − (ι−1)β_p), the eigenvalue predicted from class counts; the
/// same for every row i.
pub fn predicted_generic_eigenvalue(system: &SimilaritySystem, p: i64) -> Result<Option<BigRational>> {
    let m = system.seed.m();
    let t = anzahl_matrix(system, p, iota(m))?;
    let lc = local_constants(&system.seed, p)?;
    let beta = if m % 2 == 1 { lc.beta.clone().unwrap_or_else(BigRational::zero) } else { BigRational::zero() };
    let ones = vec![BigRational::one(); system.h()];
    let sums = t.left_apply(&ones);
    let first = sums[0].clone();
    if sums.iter().any(|s| *s != first) {
        return Ok(None);
    }
    Ok(Some((first - beta) / lc.c))
}

/// (1,…,1)·𝔱*(p^ι) = s·(1,…,1) with s = c_p(1+p^{m−2}) + β_p (m odd) or
/// c_p(1+χp^{k−1}) (m even).
pub fn zeroth_identity(system: &SimilaritySystem, p: i64) -> Result<bool> {
    let q = &system.seed;
    let m = q.m();
    let t = anzahl_matrix(system, p, iota(m))?;
    let lc = local_constants(q, p)?;
    let s = if m % 2 == 1 {
        lc.c.clone() * (BigRational::one() + rat(p.pow(m as u32 - 2)))
            + lc.beta.clone().unwrap_or_else(BigRational::zero)
    } else {
        lc.c.clone() * (BigRational::one() + rat(lc.chi * p.pow(q.k() as u32 - 1)))
    };
    let ones = vec![BigRational::one(); system.h()];
    Ok(t.left_apply(&ones).iter().all(|v| *v == s))
}

/// Predicted coefficient vectors keyed by n: 𝔯(n²a) for odd m, 𝔯(na) for even m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirichletTable {
    pub a: i64,
    pub entries: BTreeMap<i64, Vec<BigRational>>,
}

fn factor(mut n: i64) -> Vec<(i64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(a: i64) -> bool {
    a != 0 && factor(a.abs()).iter().all(|&(_, e)| e == 1)
}

/// Per-prime series coefficients H₀, H₁, … up to `degree`.
fn local_series(system: &SimilaritySystem, p: i64, a: i64, degree: usize) -> Result<Vec<Vec<Vec<BigRational>>>> {
    let q = &system.seed;
    let m = q.m();
    let h = system.h();
    let lc = local_constants(q, p)?;
    let k = q.k() as u32;
    let step = hecke_matrix(system, p)?;
    // 1/(1 − A t + b t²)
    let b = if m % 2 == 1 { rat(p.pow(m as u32 - 2)) } else { rat(lc.chi * p.pow(k - 1)) };
    let mut s = vec![identity(h)];
    for d in 1..=degree {
        let mut next = mat_mul(&step, &s[d - 1]);
        if d >= 2 {
            next = lin(&next, &BigRational::one(), &s[d - 2], &-b.clone());
        }
        s.push(next);
    }
    if m % 2 == 0 {
        return Ok(s);
    }
    // numerator 1 − χ(2a/p)p^{k−1}t
    let e = rat(lc.chi * epsilon(a, p) * p.pow(k - 1));
    Ok((0..=degree)
        .map(|d| if d == 0 { s[0].clone() } else { lin(&s[d], &BigRational::one(), &s[d - 1], &-e.clone()) })
        .collect())
}

/// Expand the Euler product prime by prime and multiply out, predicting the
/// coefficient vector at every n ≤ n_max built from primes ≤ p_limit that do
/// not divide det q. Odd m: predictions for 𝔯(n²a) with a
/// squarefree. Even m: predictions for 𝔯(na).
pub fn euler_expand(system: &SimilaritySystem, a: i64, p_limit: i64, n_max: i64) -> Result<DirichletTable> {
    let q = &system.seed;
    let m = q.m();
    if m % 2 == 1 && !is_squarefree(a) {
        return Err(Error::Invalid(format!("a = {a} is not squarefree")));
    }
    if a == 0 {
        return Err(Error::Invalid("a must be nonzero".into()));
    }
    let primes: Vec<i64> = (3..=p_limit).filter(|&p| is_prime(p) && q.det() % p != 0).collect();
    let base: Vec<BigRational> = {
        let v = coeff_vectors(system, a)?;
        v[a as usize].values.clone()
    };
    let mut series = BTreeMap::new();
    for &p in &primes {
        let mut degree = 0usize;
        let mut pk = p;
        while pk <= n_max {
            degree += 1;
            pk *= p;
        }
        series.insert(p, local_series(system, p, a, degree)?);
    }
    let h = system.h();
    let mut entries = BTreeMap::new();
    for n in 1..=n_max {
        let f = factor(n);
        if f.iter().any(|(p, _)| !series.contains_key(p)) {
            continue;
        }
        let mut mat = identity(h);
        for (p, e) in f {
            mat = mat_mul(&mat, &series[&p][e as usize]);
        }
        entries.insert(n, apply(&mat, &base));
    }
    Ok(DirichletTable { a, entries })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EulerReport {
    pub a: i64,
    pub checked: Vec<i64>,
    pub failures: Vec<i64>,
}

/// Compare [`euler_expand`] with enumerated coefficient vectors at the given n.
pub fn verify_euler(system: &SimilaritySystem, a: i64, ns: &[i64]) -> Result<EulerReport> {
    let m = system.seed.m();
    let n_max = ns.iter().copied().max().unwrap_or(1);
    let p_limit = n_max.max(3);
    let table = euler_expand(system, a, p_limit, n_max)?;
    let target = |n: i64| if m % 2 == 1 { n * n * a } else { n * a };
    let top = ns.iter().map(|&n| target(n)).max().unwrap_or(a);
    let direct = coeff_vectors(system, top)?;
    let mut checked = Vec::new();
    let mut failures = Vec::new();
    for &n in ns {
        let Some(pred) = table.entries.get(&n) else { continue };
        checked.push(n);
        if *pred != direct[target(n) as usize].values {
            failures.push(n);
        }
    }
    Ok(EulerReport { a, checked, failures })
}

/// Σ_{n=1}^{N} r(q,n)/n^s: exact for integer s, a double otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum EpsteinValue {
    Exact(BigRational),
    Approximate(f64),
}

pub fn epstein_partial(q: &QuadraticForm, s: &BigRational, n: i64) -> Result<EpsteinValue> {
    let half_m = BigRational::new(BigInt::from(q.m()), BigInt::from(2));
    if *s <= half_m {
        return Err(Error::Invalid("s must exceed m/2".into()));
    }
    let r = theta_coeffs(q, n)?;
    if s.is_integer() {
        let e = s.to_integer().to_u32().ok_or_else(|| Error::Invalid("exponent too large".into()))?;
        let sum = (1..=n).map(|k| BigRational::new(BigInt::from(r[k as usize]), BigInt::from(k).pow(e))).sum();
        return Ok(EpsteinValue::Exact(sum));
    }
    let sf = s.numer().to_f64().unwrap_or(f64::NAN) / s.denom().to_f64().unwrap_or(f64::NAN);
    Ok(EpsteinValue::Approximate((1..=n).map(|k| r[k as usize] as f64 / (k as f64).powf(sf)).sum()))
}

/// Möbius function.
pub fn mobius(n: i64) -> i64 {
    let f = factor(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShimuraRow {
    pub m: i64,
    pub a: i64,
    pub lhs: String,
    pub rhs: String,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShimuraReport {
    pub kappa: String,
    pub rows: Vec<ShimuraRow>,
    pub all_agree: bool,
}

/// 𝔯₃(m²a) against Σ_{d|m} μ(d)(−a/d)𝔯₄(m/d)·𝔯₃(a)·κ over odd m ≤ m_max, with
/// 𝔯₃ = r₃/48, 𝔯₄ = r₄/384 and κ solved at m = 1 for the first a with r₃(a) ≠ 0.
pub fn shimura_3_4_check(m_max: i64, a_list: &[i64]) -> Result<ShimuraReport> {
    let q3 = QuadraticForm::sum_of_squares(3);
    let q4 = QuadraticForm::sum_of_squares(4);
    let e3 = reps::unit_group(&q3)?.order() as i64;
    let e4 = reps::unit_group(&q4)?.order() as i64;
    let top = a_list.iter().map(|&a| m_max * m_max * a).max().unwrap_or(1);
    let r3 = theta_coeffs(&q3, top)?;
    let r4 = theta_coeffs(&q4, m_max)?;
    let n3 = |n: i64| frac(r3[n as usize], e3);
    let n4 = |n: i64| frac(r4[n as usize], e4);
    // 𝔯₃(a) = 𝔯₄(1)·𝔯₃(a)·κ
    let kappa = BigRational::one() / n4(1);
    let mut rows = Vec::new();
    for &a in a_list {
        for m in (1..=m_max).step_by(2) {
            let lhs = n3(m * m * a);
            let mut sum = BigRational::zero();
            for d in (1..=m).filter(|d| m % d == 0) {
                let mu = mobius(d);
                if mu != 0 {
                    sum += rat(mu * jacobi(-a, d)) * n4(m / d);
                }
            }
            let rhs = sum * n3(a) * kappa.clone();
            rows.push(ShimuraRow { m, a, lhs: lhs.to_string(), rhs: rhs.to_string(), agree: lhs == rhs });
        }
    }
    let all_agree = rows.iter().all(|r| r.agree);
    Ok(ShimuraReport { kappa: kappa.to_string(), rows, all_agree })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{quaternary_system, similarity_system};

    fn three() -> SimilaritySystem {
        similarity_system(&QuadraticForm::sum_of_squares(3), &[3, 5, 7]).unwrap()
    }

    #[test]
    fn coefficients() {
        let q = QuadraticForm::sum_of_squares(3);
        assert_eq!(theta_coeffs(&q, 3).unwrap(), vec![1, 6, 12, 8]);
        assert_eq!(theta_coeffs(&q, 9).unwrap()[9], 30);
        assert_eq!(theta_coeffs(&QuadraticForm::sum_of_squares(4), 1).unwrap()[1], 8);
    }

    #[test]
    fn hecke_examples() {
        let q = QuadraticForm::sum_of_squares(3);
        let t = hecke_tp2(&q, 3, 1).unwrap();
        assert_eq!(t, vec![4, 24]);
        assert_eq!(hecke_tp2(&q, 5, 1).unwrap()[1], 36);
        let n = QuadraticForm::sum_of_squares(4);
        assert_eq!(hecke_tp(&n, 3, 1).unwrap(), vec![4, 32]);
        assert!(hecke_tp(&q, 3, 1).is_err());
    }

    #[test]
    fn eichler_relation() {
        let t = three();
        for p in [3, 5] {
            assert!(verify_eichler(&t, p, 30).unwrap().holds);
        }
        let n = quaternary_system(&t, &[3, 5, 7]).unwrap();
        assert!(verify_eichler(&n, 3, 30).unwrap().holds);
        let g = similarity_system(&QuadraticForm::diagonal(&[1, 1, 16]).unwrap(), &[3, 5]).unwrap();
        assert!(g.h() >= 2);
        assert!(verify_eichler(&g, 3, 12).unwrap().holds);
        assert!(zeroth_identity(&g, 3).unwrap());
    }

    #[test]
    fn generic_eigenvalues() {
        let t = three();
        for p in [3, 5] {
            assert_eq!(generic_eigenvalue(&t, p, 20).unwrap(), Some(rat(p + 1)));
            assert_eq!(predicted_generic_eigenvalue(&t, p).unwrap(), Some(rat(p + 1)));
        }
        let n = quaternary_system(&t, &[3, 5, 7]).unwrap();
        assert_eq!(generic_eigenvalue(&n, 3, 20).unwrap(), Some(rat(4)));
    }

    #[test]
    fn euler_small() {
        let t = three();
        let table = euler_expand(&t, 1, 3, 3).unwrap();
        assert_eq!(table.entries[&1], vec![frac(6, 48)]);
        assert_eq!(table.entries[&3], vec![frac(30, 48)]);
        let r = verify_euler(&t, 2, &[1, 3, 5, 9, 15]).unwrap();
        assert!(r.failures.is_empty());
        assert_eq!(r.checked.len(), 5);
        let n = quaternary_system(&t, &[3, 5, 7]).unwrap();
        assert!(verify_euler(&n, 1, &[1, 3, 5, 7, 9]).unwrap().failures.is_empty());
    }

    #[test]
    fn epstein() {
        let q = QuadraticForm::sum_of_squares(3);
        let s = rat(2);
        assert_eq!(epstein_partial(&q, &s, 1).unwrap(), EpsteinValue::Exact(rat(6)));
        assert_eq!(epstein_partial(&q, &s, 3).unwrap(), EpsteinValue::Exact(rat(6) + frac(12, 4) + frac(8, 9)));
        assert!(epstein_partial(&q, &rat(1), 3).is_err());
    }

    #[test]
    fn three_four_identity_small() {
        let r = shimura_3_4_check(9, &[1, 2]).unwrap();
        assert_eq!(r.kappa, "48");
        assert!(r.all_agree, "{:?}", r.rows.iter().filter(|x| !x.agree).collect::<Vec<_>>());
    }
}
