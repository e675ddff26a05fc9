//! The Clifford algebra C(E,q) of a ternary form, its even subalgebra C₀ with
//! norm form N, the special element t, and the lifts Φ_A and Ψ_A.
//!
//! Full elements use the basis (e₀, e₁, e₂, e₃, e₁₂, e₁₃, e₂₃, e₁₂₃). Even
//! elements use the natural basis (e₀, e₂₃, −e₁₃, e₁₂); note the sign on e₁₃.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::intmat::{IntMatrix, SMatrix};
use crate::qform::QuadraticForm;
use crate::{Error, Result};

const WORDS: [&[usize]; 8] = [&[], &[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];

fn word_index(word: &[usize]) -> usize {
    match word {
        [] => 0,
        [0] => 1,
        [1] => 2,
        [2] => 3,
        [0, 1] => 4,
        [0, 2] => 5,
        [1, 2] => 6,
        [0, 1, 2] => 7,
        _ => unreachable!("not a normal-ordered word"),
    }
}

/// Structure constants of C(E,q): products and bars of basis monomials.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct CliffordAlgebra {
    form: QuadraticForm,
    product: [[[i64; 8]; 8]; 8],
    bar: [[i64; 8]; 8],
}

/// Rewrite a word in e₁,e₂,e₃ to normal order using eᵢ² = qᵢ and
/// eⱼeᵢ = bᵢⱼ − eᵢeⱼ for i < j.
fn reduce_word(word: &[usize], coef: i64, q0: &SMatrix, out: &mut [i64; 8]) {
    if coef == 0 {
        return;
    }
    let Some(k) = (0..word.len().saturating_sub(1)).find(|&k| word[k] >= word[k + 1]) else {
        out[word_index(word)] += coef;
        return;
    };
    let (j, i) = (word[k], word[k + 1]);
    let mut rest: Vec<usize> = word[..k].to_vec();
    rest.extend_from_slice(&word[k + 2..]);
    if i == j {
        reduce_word(&rest, coef * q0.get(i, i), q0, out);
    } else {
        reduce_word(&rest, coef * q0.get(i, j), q0, out);
        let mut swapped = word.to_vec();
        swapped.swap(k, k + 1);
        reduce_word(&swapped, -coef, q0, out);
    }
}

impl CliffordAlgebra {
    fn new(form: &QuadraticForm) -> Result<Self> {
        if form.m() != 3 {
            return Err(Error::Invalid("Clifford lifts are implemented for ternary forms".into()));
        }
        let q0 = form.q0();
        let mut product = [[[0i64; 8]; 8]; 8];
        let mut bar = [[0i64; 8]; 8];
        for a in 0..8 {
            for b in 0..8 {
                let mut w = WORDS[a].to_vec();
                w.extend_from_slice(WORDS[b]);
                reduce_word(&w, 1, q0, &mut product[a][b]);
            }
            // bar(e_{i₁…i_k}) = (−1)^k e_{i_k}…e_{i₁}
            let mut w = WORDS[a].to_vec();
            w.reverse();
            let sign = if w.len() % 2 == 0 { 1 } else { -1 };
            reduce_word(&w, sign, q0, &mut bar[a]);
        }
        Ok(CliffordAlgebra { form: form.clone(), product, bar })
    }

    pub fn form(&self) -> &QuadraticForm {
        &self.form
    }
}

/// Structure constants for q, built once per form.
pub fn algebra(q: &QuadraticForm) -> Result<Arc<CliffordAlgebra>> {
    static CACHE: OnceLock<Mutex<HashMap<QuadraticForm, Arc<CliffordAlgebra>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(a) = cache.lock().expect("clifford cache").get(q) {
        return Ok(a.clone());
    }
    let a = Arc::new(CliffordAlgebra::new(q)?);
    cache.lock().expect("clifford cache").insert(q.clone(), a.clone());
    Ok(a)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordElement {
    alg: Arc<CliffordAlgebra>,
    pub coeffs: Vec<BigInt>,
}

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

impl CliffordElement {
    pub fn new(alg: &Arc<CliffordAlgebra>, coeffs: Vec<BigInt>) -> Self {
        assert_eq!(coeffs.len(), 8, "Clifford elements have 8 coordinates");
        CliffordElement { alg: alg.clone(), coeffs }
    }

    pub fn from_i64(alg: &Arc<CliffordAlgebra>, coeffs: [i64; 8]) -> Self {
        Self::new(alg, coeffs.iter().map(|&c| big(c)).collect())
    }

    pub fn zero(alg: &Arc<CliffordAlgebra>) -> Self {
        Self::new(alg, vec![BigInt::zero(); 8])
    }

    pub fn one(alg: &Arc<CliffordAlgebra>) -> Self {
        Self::basis(alg, 0)
    }

    pub fn scalar(alg: &Arc<CliffordAlgebra>, s: BigInt) -> Self {
        let mut x = Self::zero(alg);
        x.coeffs[0] = s;
        x
    }

    pub fn basis(alg: &Arc<CliffordAlgebra>, i: usize) -> Self {
        let mut x = Self::zero(alg);
        x.coeffs[i] = BigInt::one();
        x
    }

    /// Σ xᵢeᵢ.
    pub fn vector(alg: &Arc<CliffordAlgebra>, x: &[BigInt]) -> Self {
        let mut v = Self::zero(alg);
        v.coeffs[1..4].clone_from_slice(x);
        v
    }

    pub fn algebra(&self) -> &Arc<CliffordAlgebra> {
        &self.alg
    }

    fn same_parent(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.alg, &other.alg) || self.alg.form == other.alg.form {
            Ok(())
        } else {
            Err(Error::ParentMismatch)
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_parent(other)?;
        let mut out = vec![BigInt::zero(); 8];
        for a in 0..8 {
            if self.coeffs[a].is_zero() {
                continue;
            }
            for b in 0..8 {
                if other.coeffs[b].is_zero() {
                    continue;
                }
                let ab = &self.coeffs[a] * &other.coeffs[b];
                for (o, &c) in out.iter_mut().zip(&self.alg.product[a][b]) {
                    if c != 0 {
                        *o += &ab * c;
                    }
                }
            }
        }
        Ok(Self::new(&self.alg, out))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_parent(other)?;
        Ok(Self::new(&self.alg, self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_parent(other)?;
        Ok(Self::new(&self.alg, self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect()))
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        Self::new(&self.alg, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// The anti-automorphism with ēⱼ = −eⱼ.
    pub fn bar(&self) -> Self {
        let mut out = vec![BigInt::zero(); 8];
        for a in 0..8 {
            for (o, &c) in out.iter_mut().zip(&self.alg.bar[a]) {
                if c != 0 {
                    *o += &self.coeffs[a] * c;
                }
            }
        }
        Self::new(&self.alg, out)
    }

    pub fn is_scalar(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn is_even(&self) -> bool {
        [1, 2, 3, 7].iter().all(|&i| self.coeffs[i].is_zero())
    }

    pub fn is_odd(&self) -> bool {
        [0, 4, 5, 6].iter().all(|&i| self.coeffs[i].is_zero())
    }

    /// Coordinates (x₁,x₂,x₃) if the element lies in E.
    pub fn as_vector(&self) -> Option<Vec<BigInt>> {
        let pure = [0, 4, 5, 6, 7].iter().all(|&i| self.coeffs[i].is_zero());
        pure.then(|| self.coeffs[1..4].to_vec())
    }
}

/// An element of C₀(E) in the natural basis (e₀, e₂₃, −e₁₃, e₁₂).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordEven {
    alg: Arc<CliffordAlgebra>,
    pub coeffs: Vec<BigInt>,
}

impl CliffordEven {
    pub fn new(alg: &Arc<CliffordAlgebra>, coeffs: Vec<BigInt>) -> Self {
        assert_eq!(coeffs.len(), 4, "even elements have 4 coordinates");
        CliffordEven { alg: alg.clone(), coeffs }
    }

    pub fn from_i64(alg: &Arc<CliffordAlgebra>, coeffs: [i64; 4]) -> Self {
        Self::new(alg, coeffs.iter().map(|&c| big(c)).collect())
    }

    pub fn basis(alg: &Arc<CliffordAlgebra>, i: usize) -> Self {
        let mut c = vec![BigInt::zero(); 4];
        c[i] = BigInt::one();
        Self::new(alg, c)
    }

    pub fn to_full(&self) -> CliffordElement {
        let x = &self.coeffs;
        let mut c = vec![BigInt::zero(); 8];
        c[0] = x[0].clone();
        c[6] = x[1].clone();
        c[5] = -x[2].clone();
        c[4] = x[3].clone();
        CliffordElement::new(&self.alg, c)
    }

    pub fn from_full(x: &CliffordElement) -> Result<Self> {
        if !x.is_even() {
            return Err(Error::Invalid("element is not even".into()));
        }
        let c = &x.coeffs;
        Ok(Self::new(&x.alg, vec![c[0].clone(), c[6].clone(), -c[5].clone(), c[4].clone()]))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        Self::from_full(&self.to_full().mul(&other.to_full())?)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Self::from_full(&self.to_full().add(&other.to_full())?)
    }

    pub fn bar(&self) -> Self {
        Self::from_full(&self.to_full().bar()).expect("bar preserves parity")
    }

    /// (n(x), s(x)) with x·x̄ = n(x)e₀ and x + x̄ = s(x)e₀.
    pub fn norm_trace(&self) -> Result<(BigInt, BigInt)> {
        let xb = self.bar();
        let n = self.mul(&xb)?;
        let s = self.add(&xb)?;
        let scalar = |v: &CliffordEven| v.coeffs[1..].iter().all(|c| c.is_zero());
        if !scalar(&n) || !scalar(&s) {
            return Err(Error::Verification("norm or trace is not a scalar".into()));
        }
        Ok((n.coeffs[0].clone(), s.coeffs[0].clone()))
    }
}

/// The matrix N of the norm form on C₀(E) in the natural basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvenNormForm {
    pub matrix: SMatrix,
    pub delta: i64,
    pub form: QuadraticForm,
}

impl EvenNormForm {
    /// Δ·N⁻¹ = [[2·det Q₀, ᵗ(Q₀B)], [Q₀B, Q]].
    pub fn scaled_inverse(&self) -> SMatrix {
        let q = &self.form;
        let q0 = q.q0();
        let qb = q0.mul_vec(&q.b());
        let g = q.gram();
        let mut m = SMatrix::zeros(4, 4);
        m.set(0, 0, 2 * q0.det());
        for i in 0..3 {
            m.set(0, i + 1, qb[i]);
            m.set(i + 1, 0, qb[i]);
            for j in 0..3 {
                m.set(i + 1, j + 1, *g.get(i, j));
            }
        }
        m
    }

    pub fn quadratic_form(&self) -> Result<QuadraticForm> {
        QuadraticForm::from_gram(&self.matrix)
    }
}

fn check_ternary(q: &QuadraticForm) -> Result<()> {
    if q.m() != 3 {
        return Err(Error::Invalid("Clifford lifts are implemented for ternary forms".into()));
    }
    Ok(())
}

/// N = [[2, −ᵗB], [−B, ᵗQ̃₀ + Q̃₀]].
pub fn even_norm_form(q: &QuadraticForm) -> Result<EvenNormForm> {
    check_ternary(q)?;
    let b = q.b();
    let adj = q.q0().adjoint();
    let lower = adj.transpose().add(&adj);
    let mut n = SMatrix::zeros(4, 4);
    n.set(0, 0, 2);
    for i in 0..3 {
        n.set(0, i + 1, -b[i]);
        n.set(i + 1, 0, -b[i]);
        for j in 0..3 {
            n.set(i + 1, j + 1, *lower.get(i, j));
        }
    }
    Ok(EvenNormForm { matrix: n, delta: q.delta(), form: q.clone() })
}

/// The quaternary norm form n of C₀(ℤ³, q).
pub fn norm_form(q: &QuadraticForm) -> Result<QuadraticForm> {
    even_norm_form(q)?.quadratic_form()
}

/// N computed inside the algebra as the polar form s(x·ȳ) on the natural basis.
pub fn norm_matrix_from_algebra(q: &QuadraticForm) -> Result<SMatrix> {
    let alg = algebra(q)?;
    let mut n = SMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            let x = CliffordEven::basis(&alg, i);
            let y = CliffordEven::basis(&alg, j);
            let (_, s) = x.mul(&y.bar())?.norm_trace()?;
            n.set(i, j, to_i64(&s)?);
        }
    }
    Ok(n)
}

fn to_i64(b: &BigInt) -> Result<i64> {
    use num_traits::ToPrimitive;
    b.to_i64().ok_or_else(|| Error::Invalid("coefficient exceeds 64 bits".into()))
}

/// t = 2e₁₂₃ − b₂₃e₁ + b₁₃e₂ − b₁₂e₃, checked central with t = t̄ and t² = −Δ.
pub fn special_t(q: &QuadraticForm) -> Result<CliffordElement> {
    check_ternary(q)?;
    let alg = algebra(q)?;
    let b = q.b();
    let t = CliffordElement::from_i64(&alg, [0, b[0], b[1], b[2], 0, 0, 0, 2]);
    for i in 0..8 {
        let x = CliffordElement::basis(&alg, i);
        if t.mul(&x)? != x.mul(&t)? {
            return Err(Error::Verification("t is not central".into()));
        }
    }
    if t.bar() != t {
        return Err(Error::Verification("t differs from its bar".into()));
    }
    if t.mul(&t)? != CliffordElement::scalar(&alg, big(-q.delta())) {
        return Err(Error::Verification("t² differs from −Δ".into()));
    }
    Ok(t)
}

/// T = [ᵗ(Q₀B); Q], the coordinates of e₁t, e₂t, e₃t in the natural basis.
pub fn et_embedding(q: &QuadraticForm) -> Result<SMatrix> {
    check_ternary(q)?;
    let qb = q.q0().mul_vec(&q.b());
    let g = q.gram();
    let mut t = SMatrix::zeros(4, 3);
    for j in 0..3 {
        t.set(0, j, qb[j]);
        for i in 0..3 {
            t.set(i + 1, j, *g.get(i, j));
        }
    }
    Ok(t)
}

fn even_coords(x: &CliffordElement) -> Result<Vec<BigInt>> {
    Ok(CliffordEven::from_full(x)?.coeffs)
}

/// Φ_A: first row (1, ᵗA₃Q₀A₂, −ᵗA₃Q₀A₁, ᵗA₂Q₀A₁), lower right ᵗÃ.
pub fn phi_lift(q: &QuadraticForm, a: &IntMatrix) -> Result<IntMatrix> {
    check_ternary(q)?;
    if a.rows() != 3 || a.cols() != 3 {
        return Err(Error::DimensionMismatch);
    }
    let q0 = q.q0().to_big();
    let col = |j: usize| a.col(j);
    let form = |x: &[BigInt], y: &[BigInt]| -> BigInt {
        let qy = q0.mul_vec(y);
        x.iter().zip(&qy).map(|(u, v)| u * v).sum()
    };
    let (a1, a2, a3) = (col(0), col(1), col(2));
    let z = [form(&a3, &a2), -form(&a3, &a1), form(&a2, &a1)];
    let adj_t = a.adjoint().transpose();
    let mut phi = IntMatrix::zeros(4, 4);
    phi.set(0, 0, BigInt::one());
    for j in 0..3 {
        phi.set(0, j + 1, z[j].clone());
        for i in 0..3 {
            phi.set(i + 1, j + 1, adj_t.get(i, j).clone());
        }
    }
    Ok(phi)
}

/// The algebra homomorphism φ_A on all of C(E″), eᵢ″ ↦ Σₖ aₖᵢeₖ, as an 8×8
/// matrix in the full bases; computed by multiplying images in C(E).
pub fn phi_full(q: &QuadraticForm, a: &IntMatrix) -> Result<IntMatrix> {
    let alg = algebra(q)?;
    let images: Vec<CliffordElement> = (0..3).map(|j| CliffordElement::vector(&alg, &a.col(j))).collect();
    let mut m = IntMatrix::zeros(8, 8);
    for (idx, w) in WORDS.iter().enumerate() {
        let mut x = CliffordElement::one(&alg);
        for &i in w.iter() {
            x = x.mul(&images[i])?;
        }
        for r in 0..8 {
            m.set(r, idx, x.coeffs[r].clone());
        }
    }
    Ok(m)
}

/// Φ_A computed through the algebra, as an independent route to [`phi_lift`].
pub fn phi_lift_from_algebra(q: &QuadraticForm, a: &IntMatrix) -> Result<IntMatrix> {
    let full = phi_full(q, a)?;
    let alg = algebra(q)?;
    let mut phi = IntMatrix::zeros(4, 4);
    // Natural basis of C₀(E″) in full coordinates: e₀, e₂₃, −e₁₃, e₁₂.
    let natural: [(usize, i64); 4] = [(0, 1), (6, 1), (5, -1), (4, 1)];
    for (j, &(idx, sign)) in natural.iter().enumerate() {
        let image = CliffordElement::new(&alg, full.col(idx).iter().map(|c| c * sign).collect());
        let c = even_coords(&image)?;
        for i in 0..4 {
            phi.set(i, j, c[i].clone());
        }
    }
    Ok(phi)
}

/// Φ_A, Ψ_A and Z_A for an automorph A with Q[A] = p²Q′.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftMatrix {
    pub phi: IntMatrix,
    pub psi: IntMatrix,
    pub z: Vec<BigInt>,
    pub source: IntMatrix,
}

/// Ψ_A = Φ_A·diag(p, p⁻¹, p⁻¹, p⁻¹), with exact division.
pub fn psi_lift(q: &QuadraticForm, a: &IntMatrix, p: i64) -> Result<LiftMatrix> {
    check_ternary(q)?;
    if p == 2 {
        return Err(Error::EvenPrime);
    }
    if q.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    let p2 = big(p * p);
    if !q.gram().to_big().congruence(a).all_divisible_by(&p2) {
        return Err(Error::Invalid("A is not an automorph with multiplier p²".into()));
    }
    let phi = phi_lift(q, a)?;
    let bp = big(p);
    let mut psi = IntMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in 0..4 {
            let v = phi.get(i, j);
            let w = if j == 0 {
                v * &bp
            } else {
                if !v.is_multiple_of(&bp) {
                    return Err(Error::Inconsistent);
                }
                v / &bp
            };
            psi.set(i, j, w);
        }
    }
    let z = (1..4).map(|j| phi.get(0, j).clone()).collect();
    Ok(LiftMatrix { phi, psi, z, source: a.clone() })
}

/// Whether a 4×4 integer matrix is the matrix of a unital ring homomorphism
/// C₀(E″) → C₀(E) in the natural bases.
pub fn is_even_homomorphism(phi: &IntMatrix, q: &QuadraticForm, q2: &QuadraticForm) -> Result<bool> {
    let alg = algebra(q)?;
    let alg2 = algebra(q2)?;
    let apply = |x: &CliffordEven| -> CliffordEven { CliffordEven::new(&alg, phi.mul_vec(&x.coeffs)) };
    if apply(&CliffordEven::basis(&alg2, 0)) != CliffordEven::basis(&alg, 0) {
        return Ok(false);
    }
    for i in 0..4 {
        for j in 0..4 {
            let x = CliffordEven::basis(&alg2, i);
            let y = CliffordEven::basis(&alg2, j);
            if apply(&x.mul(&y)?) != apply(&x).mul(&apply(&y))? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn isqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

/// Recover α from φ with α(x″) = φ(x″t″)·t/√(ΔΔ″), sign "+". Absent when φ is
/// not the lift of an isometry.
pub fn reconstruct_isometry(phi: &IntMatrix, q: &QuadraticForm, q2: &QuadraticForm) -> Result<Option<IntMatrix>> {
    check_ternary(q)?;
    check_ternary(q2)?;
    if phi.rows() != 4 || phi.cols() != 4 || !is_even_homomorphism(phi, q, q2)? {
        return Err(Error::NotHomomorphism);
    }
    let alg = algebra(q)?;
    let t = special_t(q)?;
    let Some(s) = isqrt(&(big(q.delta()) * big(q2.delta()))) else {
        return Ok(None);
    };
    let t2 = et_embedding(q2)?.to_big();
    let mut cols = Vec::new();
    for j in 0..3 {
        let image = CliffordEven::new(&alg, phi.mul_vec(&t2.col(j))).to_full();
        let w = image.mul(&t)?;
        let Some(v) = w.as_vector() else { return Ok(None) };
        if v.iter().any(|c| !c.is_multiple_of(&s)) {
            return Ok(None);
        }
        cols.push(v.iter().map(|c| c / &s).collect::<Vec<_>>());
    }
    let a = IntMatrix::from_cols(&cols);
    if q.gram().to_big().congruence(&a) != q2.gram().to_big() {
        return Ok(None);
    }
    Ok(Some(a))
}

/// From 𝒰 ∈ R(n, n″) ∩ Λ⁴ build U ∈ R(q, q″) ∩ Λ³ via ω(x″) = υ(x″)·ῡ(e₀″).
pub fn transfer_equivalence(q: &QuadraticForm, q2: &QuadraticForm, u4: &IntMatrix) -> Result<IntMatrix> {
    let alg = algebra(q)?;
    let n = even_norm_form(q)?.matrix.to_big();
    let n2 = even_norm_form(q2)?.matrix.to_big();
    if n.congruence(u4) != n2 || !u4.is_unimodular() {
        return Err(Error::Invalid("not an integral equivalence of norm forms".into()));
    }
    let u0 = CliffordEven::new(&alg, u4.col(0)).bar();
    let mut w = IntMatrix::zeros(4, 4);
    for j in 0..4 {
        let c = CliffordEven::new(&alg, u4.col(j)).mul(&u0)?;
        for i in 0..4 {
            w.set(i, j, c.coeffs[i].clone());
        }
    }
    let wl = w.select(&[1, 2, 3], &[1, 2, 3]);
    // ᵗW⁻¹ = ᵗW̃ / det W with det W = ±1.
    let det = wl.det();
    let u = wl.adjoint().transpose().scale(&det);
    if q.gram().to_big().congruence(&u) != q2.gram().to_big() {
        return Err(Error::Verification("transferred matrix is not an equivalence".into()));
    }
    Ok(u)
}

/// Structural identities of t, T and N for one form.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct InvariantReport {
    pub delta: i64,
    pub t_central_selfconjugate: bool,
    pub norm_of_t_embedding: bool,
    pub det_norm: bool,
    pub scaled_inverse: bool,
    pub norm_from_algebra: bool,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.t_central_selfconjugate
            && self.norm_of_t_embedding
            && self.det_norm
            && self.scaled_inverse
            && self.norm_from_algebra
    }
}

pub fn invariant_report(q: &QuadraticForm) -> Result<InvariantReport> {
    check_ternary(q)?;
    let d = q.delta();
    let nf = even_norm_form(q)?;
    let n = &nf.matrix;
    let t_ok = match special_t(q) {
        Ok(_) => true,
        Err(Error::Verification(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(InvariantReport {
        delta: d,
        t_central_selfconjugate: t_ok,
        norm_of_t_embedding: n.congruence(&et_embedding(q)?) == q.gram().scale(&d),
        det_norm: n.det() == d * d,
        scaled_inverse: n.mul(&nf.scaled_inverse()) == SMatrix::scalar(4, d),
        norm_from_algebra: *n == norm_matrix_from_algebra(q)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> QuadraticForm {
        QuadraticForm::new(3, &[vec![1, 1, 0], vec![1, 0], vec![1]]).unwrap()
    }

    #[test]
    fn multiplication_rules() {
        let q = QuadraticForm::new(3, &[vec![2, 3, -1], vec![5, 4], vec![7]]).unwrap();
        let alg = algebra(&q).unwrap();
        let e = |i| CliffordElement::basis(&alg, i);
        assert_eq!(e(1).mul(&e(1)).unwrap(), CliffordElement::scalar(&alg, big(2)));
        // e₂e₁ = b₁₂ − e₁₂
        assert_eq!(e(2).mul(&e(1)).unwrap(), CliffordElement::from_i64(&alg, [3, 0, 0, 0, -1, 0, 0, 0]));
        // vector product: e₀-coefficient is ᵗY Q₀ X
        let x = [big(1), big(-2), big(3)];
        let y = [big(4), big(0), big(-1)];
        let prod = CliffordElement::vector(&alg, &x).mul(&CliffordElement::vector(&alg, &y)).unwrap();
        let q0 = q.q0().to_big();
        let expect: BigInt = y.iter().zip(q0.mul_vec(&x)).map(|(a, b)| a * b).sum();
        assert_eq!(prod.coeffs[0], expect);
    }

    #[test]
    fn bar_examples() {
        let q = QuadraticForm::sum_of_squares(3);
        let alg = algebra(&q).unwrap();
        assert_eq!(CliffordEven::basis(&alg, 0).bar(), CliffordEven::basis(&alg, 0));
        assert_eq!(CliffordEven::basis(&alg, 1).bar(), CliffordEven::from_i64(&alg, [0, -1, 0, 0]));
        let g = QuadraticForm::new(3, &[vec![1, 5, 6], vec![2, 7], vec![3]]).unwrap();
        let alg = algebra(&g).unwrap();
        // e₁₂ ↦ b₁₂ − e₁₂
        assert_eq!(CliffordEven::basis(&alg, 3).bar(), CliffordEven::from_i64(&alg, [5, 0, 0, -1]));
    }

    #[test]
    fn norms() {
        let q = QuadraticForm::sum_of_squares(3);
        let alg = algebra(&q).unwrap();
        assert_eq!(CliffordEven::basis(&alg, 0).norm_trace().unwrap(), (big(1), big(2)));
        assert_eq!(CliffordEven::basis(&alg, 1).norm_trace().unwrap(), (big(1), big(0)));
        let n = even_norm_form(&q).unwrap();
        assert_eq!(n.matrix, SMatrix::scalar(4, 2));
        let n = even_norm_form(&xy()).unwrap();
        assert_eq!(n.matrix.col(0), vec![2, 0, 0, 1]);
        assert_eq!(n.matrix, norm_matrix_from_algebra(&xy()).unwrap());
    }

    #[test]
    fn special_elements() {
        let q = QuadraticForm::sum_of_squares(3);
        let t = special_t(&q).unwrap();
        assert_eq!(t.coeffs.iter().map(|c| to_i64(c).unwrap()).collect::<Vec<_>>(), vec![0, 0, 0, 0, 0, 0, 0, 2]);
        let t = special_t(&xy()).unwrap();
        assert_eq!(t.coeffs[3], big(-1));
        assert_eq!(xy().delta(), 3);
        let tm = et_embedding(&q).unwrap();
        let n = even_norm_form(&q).unwrap().matrix;
        assert_eq!(n.congruence(&tm), q.gram().scale(&4));
    }

    #[test]
    fn phi_examples() {
        let q = QuadraticForm::sum_of_squares(3);
        assert_eq!(phi_lift(&q, &IntMatrix::identity(3)).unwrap(), IntMatrix::identity(4));
        let a = SMatrix::diag(&[1, 1, -1]).to_big();
        assert_eq!(phi_lift(&q, &a).unwrap(), SMatrix::diag(&[1, -1, -1, 1]).to_big());
        let g = QuadraticForm::new(3, &[vec![1, 5, 6], vec![2, 7], vec![3]]).unwrap();
        let a = SMatrix::from_rows(vec![vec![1, 2, 0], vec![-1, 3, 1], vec![2, 0, 5]]).to_big();
        assert_eq!(phi_lift(&g, &a).unwrap(), phi_lift_from_algebra(&g, &a).unwrap());
    }

    #[test]
    fn reconstruct_roundtrip() {
        let q = xy();
        let a = SMatrix::from_rows(vec![vec![1, 2, 0], vec![-1, 3, 1], vec![2, 0, 5]]).to_big();
        let q2 = QuadraticForm::from_gram(&q.gram().congruence(&a.to_small().unwrap())).unwrap();
        let phi = phi_lift(&q, &a).unwrap();
        let r = reconstruct_isometry(&phi, &q, &q2).unwrap().unwrap();
        assert!(r == a || r == a.neg());
        assert_eq!(phi_lift(&q, &r).unwrap(), phi);
        assert_eq!(
            reconstruct_isometry(&IntMatrix::identity(4), &q, &q).unwrap().map(|m| m.is_unimodular()),
            Some(true)
        );
    }

    #[test]
    fn psi_examples() {
        let q = QuadraticForm::sum_of_squares(3);
        let l = psi_lift(&q, &IntMatrix::scalar(3, big(3)), 3).unwrap();
        assert_eq!(l.psi, IntMatrix::scalar(4, big(3)));
        assert!(l.z.iter().all(|z| z.is_zero()));
        assert_eq!(
            psi_lift(&QuadraticForm::diagonal(&[1, 1, 3]).unwrap(), &IntMatrix::identity(3), 3).unwrap_err(),
            Error::SingularPrime(3)
        );
    }
}
