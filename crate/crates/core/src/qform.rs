//! Integral quadratic forms keyed by their upper-triangular coefficient matrix,
//! characters, and the local constants attached to a good prime.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::intmat::SMatrix;
use crate::{Error, Result};

/// q(X) = Σ_{i≤j} q0[i][j] x_i x_j with Gram matrix Q = ᵗQ₀ + Q₀, so 2q(X) = ᵗXQX.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadraticForm {
    m: usize,
    q0: SMatrix,
    gram: SMatrix,
    det: i64,
    level: i64,
}

/// Constants c_p, β_p and χ_q(p) for a prime p not dividing det q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalConstants {
    pub p: i64,
    pub c: BigRational,
    /// Present for odd m only.
    pub beta: Option<BigRational>,
    pub chi: i64,
}

/// JSON form descriptor: `{"m": 3, "q0": [[1,0,0],[1,0],[1]]}`. Rows may be
/// given either as the upper triangle only or as full rows of Q₀.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormDescriptor {
    pub m: usize,
    pub q0: Vec<Vec<i64>>,
}

impl QuadraticForm {
    /// Build a form from rows of Q₀. Row i may list columns i..m (triangle) or 0..m.
    pub fn new(m: usize, rows: &[Vec<i64>]) -> Result<Self> {
        if m == 0 || rows.len() != m {
            return Err(Error::Invalid(format!("expected {m} coefficient rows")));
        }
        let mut q0 = SMatrix::zeros(m, m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() == m - i {
                for (k, &v) in row.iter().enumerate() {
                    q0.set(i, i + k, v);
                }
            } else if row.len() == m {
                if row[..i].iter().any(|&v| v != 0) {
                    return Err(Error::Invalid("q0 must be upper triangular".into()));
                }
                for (j, &v) in row.iter().enumerate().skip(i) {
                    q0.set(i, j, v);
                }
            } else {
                return Err(Error::Invalid(format!("row {i} has length {}", row.len())));
            }
        }
        Self::from_q0(q0)
    }

    pub fn from_q0(q0: SMatrix) -> Result<Self> {
        let m = q0.rows();
        if !q0.is_square() || (0..m).any(|i| (0..i).any(|j| *q0.get(i, j) != 0)) {
            return Err(Error::Invalid("q0 must be square upper triangular".into()));
        }
        let gram = q0.transpose().add(&q0);
        let det = gram.det();
        if det == 0 {
            return Err(Error::SingularForm);
        }
        let level = compute_level(&gram, det);
        Ok(QuadraticForm { m, q0, gram, det, level })
    }

    /// Form with the given even symmetric Gram matrix.
    pub fn from_gram(gram: &SMatrix) -> Result<Self> {
        let m = gram.rows();
        if gram.transpose() != *gram || (0..m).any(|i| gram.get(i, i) % 2 != 0) {
            return Err(Error::Invalid("Gram matrix must be even symmetric".into()));
        }
        let mut q0 = SMatrix::zeros(m, m);
        for i in 0..m {
            q0.set(i, i, gram.get(i, i) / 2);
            for j in i + 1..m {
                q0.set(i, j, *gram.get(i, j));
            }
        }
        Self::from_q0(q0)
    }

    pub fn diagonal(coeffs: &[i64]) -> Result<Self> {
        Self::from_q0(SMatrix::diag(coeffs))
    }

    /// x₁² + … + x_k².
    pub fn sum_of_squares(k: usize) -> Self {
        Self::diagonal(&vec![1; k]).expect("nonsingular")
    }

    pub fn from_descriptor(d: &FormDescriptor) -> Result<Self> {
        Self::new(d.m, &d.q0)
    }

    pub fn descriptor(&self) -> FormDescriptor {
        let q0 = (0..self.m).map(|i| (i..self.m).map(|j| *self.q0.get(i, j)).collect()).collect();
        FormDescriptor { m: self.m, q0 }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q0(&self) -> &SMatrix {
        &self.q0
    }

    pub fn gram(&self) -> &SMatrix {
        &self.gram
    }

    /// det q = det Q.
    pub fn det(&self) -> i64 {
        self.det
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    /// k = (m−1)/2 for odd m, m/2 for even m.
    pub fn k(&self) -> usize {
        self.m / 2
    }

    /// B = ᵗ(−b₂₃, b₁₃, −b₁₂); ternary forms only.
    pub fn b(&self) -> [i64; 3] {
        assert_eq!(self.m, 3, "B is defined for ternary forms");
        [-*self.q0.get(1, 2), *self.q0.get(0, 2), -*self.q0.get(0, 1)]
    }

    /// Δ = det q / 2; ternary forms only.
    pub fn delta(&self) -> i64 {
        assert_eq!(self.m, 3, "Δ is defined for ternary forms");
        self.det / 2
    }

    pub fn evaluate(&self, x: &[i64]) -> i64 {
        assert_eq!(x.len(), self.m, "vector length must equal m");
        let mut s = 0;
        for i in 0..self.m {
            if x[i] == 0 {
                continue;
            }
            for j in i..self.m {
                s += self.q0.get(i, j) * x[i] * x[j];
            }
        }
        s
    }

    /// ᵗX Q Y.
    pub fn bilinear(&self, x: &[i64], y: &[i64]) -> i64 {
        let mut s = 0;
        for i in 0..self.m {
            for j in 0..self.m {
                s += x[i] * self.gram.get(i, j) * y[j];
            }
        }
        s
    }

    /// Leading principal minors of Q all positive.
    pub fn is_positive_definite(&self) -> bool {
        (1..=self.m).all(|k| {
            let idx: Vec<usize> = (0..k).collect();
            self.gram.select(&idx, &idx).det() > 0
        })
    }

    /// The form with Gram matrix ᵗM Q M (M square).
    pub fn transform(&self, m: &SMatrix) -> Result<Self> {
        Self::from_gram(&self.gram.congruence(m))
    }

    /// Short key used in reports.
    pub fn key(&self) -> String {
        let rows: Vec<String> = (0..self.m)
            .map(|i| (i..self.m).map(|j| self.q0.get(i, j).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        rows.join(";")
    }
}

impl fmt::Debug for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q[{}]", self.key())
    }
}

/// Least ℓ > 0 with ℓ·Q⁻¹ even. Such ℓ divides 2·det, so only divisors are scanned.
fn compute_level(gram: &SMatrix, det: i64) -> i64 {
    let adj = gram.adjoint();
    let n = gram.rows();
    let bound = 2 * det.abs();
    for l in 1..=bound {
        if bound % l != 0 {
            continue;
        }
        let ok = (0..n).all(|i| {
            (0..n).all(|j| {
                let v = l * adj.get(i, j);
                if v % det != 0 {
                    return false;
                }
                i != j || (v / det) % 2 == 0
            })
        });
        if ok {
            return l;
        }
    }
    bound
}

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Odd primes in increasing order up to `limit`.
pub fn odd_primes_upto(limit: i64) -> Vec<i64> {
    (3..=limit).filter(|&n| is_prime(n)).collect()
}

fn residue_table(p: i64) -> std::sync::Arc<Vec<bool>> {
    static CACHE: OnceLock<Mutex<HashMap<i64, std::sync::Arc<Vec<bool>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("residue cache poisoned");
    guard
        .entry(p)
        .or_insert_with(|| {
            let mut t = vec![false; p as usize];
            for x in 1..p {
                t[((x * x) % p) as usize] = true;
            }
            std::sync::Arc::new(t)
        })
        .clone()
}

/// Jacobi symbol (a/n) for odd positive n, by reciprocity.
pub fn jacobi(a: i64, n: i64) -> i64 {
    assert!(n > 0 && n % 2 == 1, "jacobi symbol needs odd positive modulus");
    let mut a = a.mod_floor(&n);
    let mut n = n;
    let mut s = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                s = -s;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            s = -s;
        }
        a %= n;
    }
    if n == 1 {
        s
    } else {
        0
    }
}

/// Legendre symbol (a/p) for an odd prime p: residue table below 10⁴, reciprocity above.
pub fn legendre(a: i64, p: i64) -> i64 {
    assert!(p > 2 && p % 2 == 1, "legendre symbol needs an odd prime");
    let r = a.mod_floor(&p);
    if r == 0 {
        return 0;
    }
    if p < 10_000 {
        if residue_table(p)[r as usize] {
            1
        } else {
            -1
        }
    } else {
        jacobi(r, p)
    }
}

fn check_odd_prime(p: i64) -> Result<()> {
    if p == 2 {
        return Err(Error::EvenPrime);
    }
    if !is_prime(p) {
        return Err(Error::Invalid(format!("{p} is not prime")));
    }
    Ok(())
}

/// χ_q(p) = ((−1)^k det q / p).
pub fn character(q: &QuadraticForm, p: i64) -> Result<i64> {
    check_odd_prime(p)?;
    let sign = if q.k() % 2 == 0 { 1 } else { -1 };
    Ok(legendre(sign * q.det(), p))
}

/// ε_p(a) = (2a/p).
pub fn epsilon(a: i64, p: i64) -> i64 {
    legendre(2 * a.mod_floor(&p), p)
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn rpow(p: i64, e: i64) -> BigRational {
    rat(p).pow(e as i32)
}

/// ∏_{i=1}^{a−1} (p^{2(k−i)} − 1)/(1 − p^{−i}).
fn flag_product(p: i64, k: i64, a: i64) -> BigRational {
    let mut acc = BigRational::one();
    for i in 1..a {
        acc *= (rpow(p, 2 * (k - i)) - BigRational::one()) / (BigRational::one() - rpow(p, -i));
    }
    acc
}

/// c_p and β_p for forms in m variables with character value χ at p.
pub fn constants_for(m: usize, p: i64, chi: i64) -> (BigRational, Option<BigRational>) {
    let m = m as i64;
    if m % 2 == 0 {
        let k = m / 2;
        let mut c = BigRational::one();
        if m > 2 {
            for i in 0..=k - 2 {
                c *= BigRational::one() + rat(chi) * rpow(p, i);
            }
        }
        (c, None)
    } else {
        let k = (m - 1) / 2;
        let mut c = BigRational::zero();
        let mut beta = BigRational::zero();
        for a in 1..=k {
            let f = flag_product(p, k, a);
            c += f.clone() * rpow(p, 1 - a);
            let num = rpow(p, m - 2) - rpow(p, a - 1) * rat(p + 1) + BigRational::one();
            let den = rpow(p, a - 1) * (rpow(p, a) - BigRational::one());
            beta += f * num / den;
        }
        (c, Some(beta))
    }
}

pub fn local_constants(q: &QuadraticForm, p: i64) -> Result<LocalConstants> {
    check_odd_prime(p)?;
    if q.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    let chi = character(q, p)?;
    let (c, beta) = constants_for(q.m(), p, chi);
    Ok(LocalConstants { p, c, beta, chi })
}

/// α_p(d) and κ_p(d) for odd m = 2k+1 and 1 ≤ d ≤ k.
pub fn alpha_kappa(m: usize, d: usize, p: i64) -> Result<(BigRational, BigRational)> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::Invalid("alpha_kappa needs odd m >= 3".into()));
    }
    let k = (m - 1) / 2;
    if d < 1 || d > k {
        return Err(Error::Invalid(format!("d = {d} out of range 1..={k}")));
    }
    check_odd_prime(p)?;
    let (m, d, k) = (m as i64, d as i64, k as i64);
    let mut alpha = rpow(p, 1 - d);
    for s in 1..d {
        alpha *= (rpow(p, 2 * (k - s)) - BigRational::one()) / (BigRational::one() - rpow(p, -s));
    }
    let kappa = (rpow(p, m - 2) - rpow(p, d - 1)) / (rpow(p, d) - BigRational::one()) - BigRational::one();
    Ok((alpha, kappa))
}

/// δ(X): 1 iff every entry of X is an integer.
pub fn kronecker_indicator(x: &[BigRational]) -> i64 {
    i64::from(x.iter().all(|v| v.is_integer()))
}

/// δ(K / d) for an integer column K.
pub fn divisible_indicator(k: &[i64], d: i64) -> i64 {
    i64::from(k.iter().all(|v| v % d == 0))
}

pub fn to_i64(r: &BigRational) -> Option<i64> {
    use num_traits::ToPrimitive;
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

pub fn is_nonneg_integer(r: &BigRational) -> bool {
    r.is_integer() && !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        rat(n)
    }

    #[test]
    fn three_squares_derived_data() {
        let q = QuadraticForm::sum_of_squares(3);
        assert_eq!(q.gram(), &SMatrix::scalar(3, 2));
        assert_eq!(q.det(), 8);
        assert_eq!(q.delta(), 4);
        assert_eq!(q.b(), [0, 0, 0]);
        assert_eq!(q.level(), 4);
    }

    #[test]
    fn mixed_form_derived_data() {
        let q = QuadraticForm::new(3, &[vec![1, 1, 0], vec![1, 0], vec![1]]).unwrap();
        assert_eq!(q.gram(), &SMatrix::from_rows(vec![vec![2, 1, 0], vec![1, 2, 0], vec![0, 0, 2]]));
        assert_eq!(q.b(), [0, 0, -1]);
        assert_eq!(q.det(), 6);
        assert_eq!(q.evaluate(&[1, 1, 0]), 3);
        // det q = 2(4 det Q₀ − Q₀[B])
        let b = q.b();
        let q0b: i64 = (0..3).map(|i| (0..3).map(|j| b[i] * q.q0().get(i, j) * b[j]).sum::<i64>()).sum();
        assert_eq!(q.det(), 2 * (4 * q.q0().det() - q0b));
    }

    #[test]
    fn indefinite_and_singular() {
        let q = QuadraticForm::diagonal(&[1, -1, 1]).unwrap();
        assert_eq!(q.det(), -8);
        assert!(!q.is_positive_definite());
        let err = QuadraticForm::new(2, &[vec![1, 2], vec![1]]).unwrap_err();
        assert_eq!(err, Error::SingularForm);
    }

    #[test]
    fn evaluation() {
        let q = QuadraticForm::sum_of_squares(3);
        assert_eq!(q.evaluate(&[1, 0, 0]), 1);
        assert_eq!(q.evaluate(&[1, 2, 2]), 9);
        assert_eq!(2 * q.evaluate(&[1, 2, 2]), q.bilinear(&[1, 2, 2], &[1, 2, 2]));
    }

    #[test]
    fn characters() {
        let q = QuadraticForm::sum_of_squares(3);
        assert_eq!(character(&q, 3).unwrap(), 1);
        assert_eq!(character(&q, 5).unwrap(), -1);
        assert_eq!(character(&q, 2).unwrap_err(), Error::EvenPrime);
        let n = QuadraticForm::sum_of_squares(4);
        for p in [3, 5, 7, 11, 13] {
            assert_eq!(character(&n, p).unwrap(), 1);
        }
    }

    #[test]
    fn epsilons() {
        assert_eq!(epsilon(1, 3), -1);
        assert_eq!(epsilon(1, 7), 1);
        for p in [3, 5, 7, 11] {
            assert_eq!(epsilon(p, p), 0);
        }
    }

    #[test]
    fn legendre_table_matches_reciprocity() {
        for p in odd_primes_upto(600) {
            for a in -20..60 {
                assert_eq!(legendre(a, p), jacobi(a, p), "a={a} p={p}");
            }
        }
        assert_eq!(legendre(2, 10_007), jacobi(2, 10_007));
    }

    #[test]
    fn local_constant_examples() {
        let q3 = QuadraticForm::sum_of_squares(3);
        for p in [3, 5, 7, 11, 13] {
            let lc = local_constants(&q3, p).unwrap();
            assert_eq!((lc.c, lc.beta), (r(1), Some(r(0))));
        }
        let q4 = QuadraticForm::sum_of_squares(4);
        assert_eq!(local_constants(&q4, 3).unwrap().c, r(2));
        assert_eq!(local_constants(&q4, 3).unwrap().beta, None);
        let q5 = QuadraticForm::sum_of_squares(5);
        let lc = local_constants(&q5, 3).unwrap();
        assert_eq!(lc.c, r(5));
        assert_eq!(lc.beta, Some(r(20)));
        assert_eq!(local_constants(&q3, 2).unwrap_err(), Error::EvenPrime);
        let q = QuadraticForm::diagonal(&[1, 1, 3]).unwrap();
        assert_eq!(local_constants(&q, 3).unwrap_err(), Error::SingularPrime(3));
    }

    #[test]
    fn alpha_kappa_examples() {
        assert_eq!(alpha_kappa(3, 1, 3).unwrap(), (r(1), r(0)));
        assert_eq!(alpha_kappa(5, 1, 3).unwrap(), (r(1), r(12)));
        // p^{-1}(p²−1)/(1−p^{-1}) = p+1
        assert_eq!(alpha_kappa(5, 2, 3).unwrap().0, r(4));
        assert!(alpha_kappa(5, 3, 3).is_err());
        for p in [3, 5, 7, 11] {
            assert_eq!(alpha_kappa(3, 1, p).unwrap(), (r(1), r(0)));
        }
    }

    #[test]
    fn alpha_sum_matches_c_and_beta() {
        for m in [3usize, 5, 7] {
            for p in [3, 5, 7] {
                let (c, beta) = constants_for(m, p, 1);
                let mut sa = BigRational::zero();
                let mut sak = BigRational::zero();
                for d in 1..=(m - 1) / 2 {
                    let (a, k) = alpha_kappa(m, d, p).unwrap();
                    sak += a.clone() * k;
                    sa += a;
                }
                assert_eq!(sa, c);
                assert_eq!(Some(sak), beta);
            }
        }
    }

    #[test]
    fn indicators() {
        assert_eq!(kronecker_indicator(&[r(1), r(0), r(1)]), 1);
        assert_eq!(kronecker_indicator(&[BigRational::new(1.into(), 3.into())]), 0);
        assert_eq!(divisible_indicator(&[9, 3], 3), 1);
        assert_eq!(divisible_indicator(&[9, 3], 9), 0);
    }

    #[test]
    fn descriptor_roundtrip() {
        let q = QuadraticForm::new(3, &[vec![1, 1, 0], vec![2, 0], vec![3]]).unwrap();
        let d = q.descriptor();
        assert_eq!(d.q0, vec![vec![1, 1, 0], vec![2, 0], vec![3]]);
        assert_eq!(QuadraticForm::from_descriptor(&d).unwrap(), q);
        let full = QuadraticForm::new(3, &[vec![1, 1, 0], vec![0, 2, 0], vec![0, 0, 3]]).unwrap();
        assert_eq!(full, q);
    }
}
