//! Isotropic sums over (ℤ/p²)^m and (ℤ/p)^4: brute-force subgroup counts and
//! the closed formulas they are compared against.
//!
//! A right coset MΛ^m with Mℤ^m ⊇ p²ℤ^m is the same thing as the subgroup
//! G = Mℤ^m / p²ℤ^m. Subgroups of type (p²)^a₀ (p)^a₁ are parametrized by
//! W₂ = G mod p (dim a₀), W₁ = {x : px ∈ G} ⊇ W₂ (dim a₀+a₁) and lifts
//! uᵢ + p·vᵢ of a basis of W₂ with vᵢ reduced modulo W₁.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::intmat::{column_hnf, in_lattice, lattice_mod, modp, SMatrix};
use crate::qform::{self, QuadraticForm};
use crate::{Error, Result};

/// A subgroup of (ℤ/p^δ)^m, stored as the Hermite basis of its preimage in ℤ^m.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IsotropicSubmodule {
    pub modulus: i64,
    pub ambient_dim: usize,
    pub generator: SMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IsotropicSumReport {
    pub q: String,
    pub p: i64,
    pub d: usize,
    pub k: Vec<i64>,
    pub brute: i64,
    pub formula: i64,
    pub agree: bool,
}

/// Exponents of diag(1,…,1, p,…,p, p²,…,p²) = D_p(d) for odd m.
pub fn dp_profile(m: usize, d: usize) -> Vec<u32> {
    let mut e = vec![0; d];
    e.extend(std::iter::repeat_n(1, m - 2 * d));
    e.extend(std::iter::repeat_n(2, d));
    e
}

/// Exponents of diag(1,1,p,p).
pub fn quaternary_profile() -> Vec<u32> {
    vec![0, 0, 1, 1]
}

fn profile_counts(profile: &[u32]) -> Result<(usize, usize, usize)> {
    if profile.is_empty() || profile.windows(2).any(|w| w[0] > w[1]) || profile.iter().any(|&e| e > 2) {
        return Err(Error::Invalid(format!("unsupported divisor profile {profile:?}")));
    }
    let c = |v| profile.iter().filter(|&&e| e == v).count();
    Ok((c(0), c(1), c(2)))
}

fn check_odd_prime(p: i64) -> Result<()> {
    if p == 2 {
        return Err(Error::EvenPrime);
    }
    if !qform::is_prime(p) {
        return Err(Error::Invalid(format!("{p} is not prime")));
    }
    Ok(())
}

/// All r-dimensional subspaces of 𝔽_p^n, each as its reduced row echelon basis.
pub fn subspaces(n: usize, r: usize, p: i64) -> Vec<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    for pivots in crate::intmat::combinations(n, r) {
        // Free slots: row i, column c > pivots[i] that is not a pivot column.
        let slots: Vec<(usize, usize)> = (0..r)
            .flat_map(|i| {
                let pv = pivots.clone();
                (pivots[i] + 1..n).filter(move |c| !pv.contains(c)).map(move |c| (i, c))
            })
            .collect();
        let total = (p as u64).pow(slots.len() as u32);
        for mut code in 0..total {
            let mut rows = vec![vec![0i64; n]; r];
            for (i, &c) in pivots.iter().enumerate() {
                rows[i][c] = 1;
            }
            for &(i, c) in &slots {
                rows[i][c] = (code % p as u64) as i64;
                code /= p as u64;
            }
            out.push(rows);
        }
    }
    out
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Subspaces W₁ with W₂ ⊆ W₁ ⊆ `ambient`, dim W₁ = dim W₂ + extra; RREF bases.
fn intermediate_spaces(w2: &[Vec<i64>], ambient: &[Vec<i64>], extra: usize, p: i64, n: usize) -> Vec<Vec<Vec<i64>>> {
    // Complete w2 to a basis of `ambient` by greedily adding ambient vectors.
    let mut basis = w2.to_vec();
    let mut comp = Vec::new();
    for v in ambient {
        let mut t = basis.clone();
        t.push(v.clone());
        if modp::rank(&t, p) > basis.len() {
            basis.push(v.clone());
            comp.push(v.clone());
        }
    }
    if extra > comp.len() {
        return Vec::new();
    }
    subspaces(comp.len(), extra, p)
        .into_iter()
        .map(|sub| {
            let mut rows = w2.to_vec();
            for s in sub {
                let mut v = vec![0i64; n];
                for (coef, c) in s.iter().zip(&comp) {
                    for j in 0..n {
                        v[j] += coef * c[j];
                    }
                }
                rows.push(v);
            }
            modp::rref(&rows, p).0
        })
        .collect()
}

fn full_space(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

/// Preimage lattice of the subgroup generated by lifts uᵢ + p·vᵢ and p·W₁.
fn subgroup_lattice(lifts: &[Vec<i64>], w1: &[Vec<i64>], p: i64, modulus: i64, n: usize) -> SMatrix {
    let mut cols: Vec<Vec<i64>> = lifts.to_vec();
    cols.extend(w1.iter().map(|w| w.iter().map(|x| x * p).collect()));
    if cols.is_empty() {
        return SMatrix::scalar(n, modulus);
    }
    lattice_mod(&SMatrix::from_cols(&cols), &modulus)
}

/// Lift choices vᵢ reduced modulo W₁: supported on the non-pivot columns of W₁.
fn lift_choices(w1: &[Vec<i64>], n: usize, p: i64) -> Vec<Vec<i64>> {
    let (_, piv) = if w1.is_empty() { (Vec::new(), Vec::new()) } else { modp::rref(w1, p) };
    let free: Vec<usize> = (0..n).filter(|c| !piv.contains(c)).collect();
    let total = (p as u64).pow(free.len() as u32);
    (0..total)
        .map(|mut code| {
            let mut v = vec![0i64; n];
            for &c in &free {
                v[c] = (code % p as u64) as i64;
                code /= p as u64;
            }
            v
        })
        .collect()
}

fn cartesian(choices: &[Vec<i64>], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..choices.len()).map(move |i| {
                    let mut t = prefix.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

/// One Hermite representative per right coset MΛ^m in Λ^m·diag(p^e)·Λ^m / Λ^m,
/// for exponent profiles with entries in {0,1,2}. Sorted.
pub fn coset_representatives(m: usize, profile: &[u32], p: i64) -> Result<Vec<SMatrix>> {
    check_odd_prime(p)?;
    if profile.len() != m {
        return Err(Error::DimensionMismatch);
    }
    let (a0, a1, a2) = profile_counts(profile)?;
    let modulus = if a2 > 0 { p * p } else { p };
    let full = full_space(m);
    let mut out: Vec<SMatrix> = subspaces(m, a0, p)
        .into_par_iter()
        .flat_map_iter(|w2| {
            let mut local = Vec::new();
            for w1 in intermediate_spaces(&w2, &full, a1, p, m) {
                if modulus == p {
                    // W₁ is everything; the subgroup is W₂ itself.
                    local.push(subgroup_lattice(&w2, &[], p, p, m));
                    continue;
                }
                let choices = lift_choices(&w1, m, p);
                for pick in cartesian(&choices, a0) {
                    let lifts: Vec<Vec<i64>> = w2
                        .iter()
                        .zip(&pick)
                        .map(|(u, &i)| u.iter().zip(&choices[i]).map(|(a, b)| a + p * b).collect())
                        .collect();
                    local.push(subgroup_lattice(&lifts, &w1, p, modulus, m));
                }
            }
            local
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Canonical submodule for a coset representative.
pub fn submodule_of(m: &SMatrix, modulus: i64) -> IsotropicSubmodule {
    IsotropicSubmodule { modulus, ambient_dim: m.rows(), generator: lattice_mod(m, &modulus) }
}

/// Whether M divides the column K from the left, i.e. K ∈ Mℤ^m.
pub fn divides_column(m: &SMatrix, k: &[i64]) -> bool {
    match column_hnf(m) {
        Ok(h) => in_lattice(&h, k),
        Err(_) => false,
    }
}

fn check_p2_inputs(q: &QuadraticForm, d: usize, p: i64) -> Result<()> {
    check_odd_prime(p)?;
    let m = q.m();
    if m % 2 == 0 {
        return Err(Error::Invalid("isotropic p²-sums require odd m".into()));
    }
    if d < 1 || d > (m - 1) / 2 {
        return Err(Error::Invalid(format!("d = {d} out of range for m = {m}")));
    }
    if q.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    Ok(())
}

fn check_k(q: &QuadraticForm, k: &[i64], p: i64) -> Result<()> {
    if k.len() != q.m() {
        return Err(Error::DimensionMismatch);
    }
    if q.evaluate(k) % (p * p) != 0 {
        return Err(Error::Invalid("q(K) must be divisible by p²".into()));
    }
    Ok(())
}

/// Hermite representatives of all cosets M ∈ Λ^m D_p(d) Λ^m / Λ^m with Q[M] ≡ 0 mod p².
///
/// Isotropy forces W₂ totally isotropic mod p and W₁ ⊆ W₂^⊥, which prunes the
/// subgroup walk; every survivor is rechecked on the full matrix Q[M]. Memoized.
pub fn isotropic_cosets(q: &QuadraticForm, d: usize, p: i64) -> Result<Arc<Vec<SMatrix>>> {
    type Cache = Mutex<HashMap<(QuadraticForm, i64, usize), Arc<Vec<SMatrix>>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    check_p2_inputs(q, d, p)?;
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (q.clone(), p, d);
    if let Some(v) = cache.lock().expect("isotropic coset cache").get(&key) {
        return Ok(v.clone());
    }
    let m = q.m();
    let (a0, a1, _) = profile_counts(&dp_profile(m, d))?;
    let gram = q.gram();
    let p2 = p * p;
    let found: Vec<Result<Vec<SMatrix>>> = subspaces(m, a0, p)
        .into_par_iter()
        .filter(|w2| w2.iter().all(|u| w2.iter().all(|v| dot(u, &gram.mul_vec(v)) % p == 0)))
        .map(|w2| {
            let mut local = Vec::new();
            let rows: Vec<Vec<i64>> = w2.iter().map(|u| gram.mul_vec(u)).collect();
            let perp = modp::nullspace(&rows, m, p);
            let qu: Vec<Vec<i64>> = rows;
            let g0: Vec<Vec<i64>> = w2.iter().map(|u| qu.iter().map(|qv| dot(u, qv)).collect()).collect();
            for w1 in intermediate_spaces(&w2, &perp, a1, p, m) {
                let choices = lift_choices(&w1, m, p);
                // t[c][i] = ᵗv_c·Q·u_i mod p
                let t: Vec<Vec<i64>> =
                    choices.iter().map(|v| qu.iter().map(|x| dot(v, x).mod_floor(&p)).collect()).collect();
                for pick in cartesian(&choices, a0) {
                    let ok = (0..a0)
                        .all(|i| (i..a0).all(|j| (g0[i][j] / p + t[pick[j]][i] + t[pick[i]][j]).mod_floor(&p) == 0));
                    if !ok {
                        continue;
                    }
                    let lifts: Vec<Vec<i64>> = w2
                        .iter()
                        .zip(&pick)
                        .map(|(u, &c)| u.iter().zip(&choices[c]).map(|(a, b)| a + p * b).collect())
                        .collect();
                    let lat = subgroup_lattice(&lifts, &w1, p, p2, m);
                    if !gram.congruence(&lat).all_divisible_by(&p2) {
                        return Err(Error::Verification("pruned isotropic lift fails Q[M] ≡ 0 mod p²".into()));
                    }
                    local.push(lat);
                }
            }
            Ok(local)
        })
        .collect();
    let mut out = Vec::new();
    for f in found {
        out.extend(f?);
    }
    out.sort();
    let out = Arc::new(out);
    cache.lock().expect("isotropic coset cache").insert(key, out.clone());
    Ok(out)
}

/// Hermite representatives of the cosets M ∈ Λ^m·diag(1,…,1,p,…,p)·Λ^m / Λ^m
/// (m even, m/2 ones) with Q[M] ≡ 0 mod p: the preimages of the totally
/// isotropic m/2-dimensional subspaces of 𝔽_p^m. Sorted.
pub fn isotropic_cosets_p(q: &QuadraticForm, p: i64) -> Result<Vec<SMatrix>> {
    check_odd_prime(p)?;
    let m = q.m();
    if m % 2 != 0 {
        return Err(Error::Invalid("multiplier-p cosets require even m".into()));
    }
    if q.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    let gram = q.gram();
    let mut out: Vec<SMatrix> = subspaces(m, m / 2, p)
        .into_par_iter()
        .filter(|w| w.iter().all(|u| w.iter().all(|v| dot(u, &gram.mul_vec(v)) % p == 0)))
        .map(|w| subgroup_lattice(&w, &[], p, p, m))
        .collect();
    out.sort();
    Ok(out)
}

/// Number of cosets in `cosets` dividing K.
pub fn count_dividing(cosets: &[SMatrix], k: &[i64]) -> i64 {
    cosets.iter().filter(|h| in_lattice(h, k)).count() as i64
}

/// S_{p²}(q, D_p(d), K) by direct count over isotropic subgroups.
pub fn brute_isotropic_sum_p2(q: &QuadraticForm, d: usize, k: &[i64], p: i64) -> Result<i64> {
    check_p2_inputs(q, d, p)?;
    check_k(q, k, p)?;
    Ok(count_dividing(&isotropic_cosets(q, d, p)?, k))
}

/// The same count taken over the complete, unfiltered coset list. Only
/// practical for small m and p; used to validate the pruned walk.
pub fn brute_isotropic_sum_p2_unpruned(q: &QuadraticForm, d: usize, k: &[i64], p: i64) -> Result<i64> {
    check_p2_inputs(q, d, p)?;
    check_k(q, k, p)?;
    let p2 = p * p;
    let reps = coset_representatives(q.m(), &dp_profile(q.m(), d), p)?;
    Ok(reps.iter().filter(|m| q.gram().congruence(m).all_divisible_by(&p2) && in_lattice(m, k)).count() as i64)
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// ε_p(q(K/p)) when K ≡ 0 mod p, else 0 (the term is then switched off anyway).
fn k_epsilon(q: &QuadraticForm, k: &[i64], p: i64) -> i64 {
    if qform::divisible_indicator(k, p) == 1 {
        let l: Vec<i64> = k.iter().map(|x| x / p).collect();
        qform::epsilon(q.evaluate(&l), p)
    } else {
        0
    }
}

fn integral(r: BigRational, what: &str) -> Result<i64> {
    qform::to_i64(&r).ok_or_else(|| Error::Verification(format!("{what} evaluated to non-integer {r}")))
}

/// The closed form α_p(d)·{1 + (ε χ p^{k−1} + κ_p(d))·δ(K/p) + p^{m−2}·δ(K/p²)}.
pub fn formula_isotropic_sum_p2(q: &QuadraticForm, d: usize, k: &[i64], p: i64) -> Result<i64> {
    check_p2_inputs(q, d, p)?;
    check_k(q, k, p)?;
    let m = q.m();
    let chi = qform::character(q, p)?;
    let (alpha, kappa) = qform::alpha_kappa(m, d, p)?;
    let kk = q.k() as u32;
    let eps = k_epsilon(q, k, p);
    let d1 = qform::divisible_indicator(k, p);
    let d2 = qform::divisible_indicator(k, p * p);
    let inner = BigRational::one() + (rat(eps * chi * p.pow(kk - 1)) + kappa) * rat(d1) + rat(p.pow(m as u32 - 2) * d2);
    integral(alpha * inner, "isotropic sum formula")
}

/// Σ_d S_{p²}(q, D_p(d), K) in closed form: c_p·{1 + (εχp^{k−1} + c_p⁻¹β_p)δ(K/p) + p^{m−2}δ(K/p²)}.
pub fn summed_isotropic_p2(q: &QuadraticForm, k: &[i64], p: i64) -> Result<i64> {
    check_p2_inputs(q, 1, p)?;
    check_k(q, k, p)?;
    let m = q.m();
    let lc = qform::local_constants(q, p)?;
    let beta = lc.beta.clone().unwrap_or_else(BigRational::zero);
    let kk = q.k() as u32;
    let eps = k_epsilon(q, k, p);
    let d1 = qform::divisible_indicator(k, p);
    let d2 = qform::divisible_indicator(k, p * p);
    let inner = BigRational::one()
        + (rat(eps * lc.chi * p.pow(kk - 1)) + beta / lc.c.clone()) * rat(d1)
        + rat(p.pow(m as u32 - 2) * d2);
    integral(lc.c * inner, "summed isotropic formula")
}

/// Σ_d of the brute-force counts.
pub fn brute_summed_isotropic_p2(q: &QuadraticForm, k: &[i64], p: i64) -> Result<i64> {
    let mut total = 0;
    for d in 1..=(q.m() - 1) / 2 {
        total += brute_isotropic_sum_p2(q, d, k, p)?;
    }
    Ok(total)
}

/// Two-dimensional totally isotropic subspaces of (𝔽_p^4, n) containing the
/// span of the columns of `a` mod p.
pub fn brute_isotropic_sum_p(n: &QuadraticForm, a: &[Vec<i64>], p: i64) -> Result<i64> {
    check_odd_prime(p)?;
    if n.m() != 4 || a.iter().any(|c| c.len() != 4) {
        return Err(Error::DimensionMismatch);
    }
    let gram = n.gram();
    let count = subspaces(4, 2, p)
        .into_iter()
        .filter(|w| {
            let iso = w.iter().all(|u| w.iter().all(|v| dot(u, &gram.mul_vec(v)) % p == 0));
            iso && a.iter().all(|c| {
                let mut t = w.clone();
                t.push(c.clone());
                modp::rank(&t, p) == 2
            })
        })
        .count();
    Ok(count as i64)
}

/// The case table: 1, 1+χ or (1+χ)(p+1) by rank of `a` mod p; 0 when the
/// column space is not totally isotropic or has rank above 2.
pub fn formula_isotropic_sum_p(n: &QuadraticForm, a: &[Vec<i64>], p: i64) -> Result<i64> {
    check_odd_prime(p)?;
    if n.det() % p == 0 {
        return Err(Error::SingularPrime(p));
    }
    let chi = qform::character(n, p)?;
    let gram = n.gram();
    let iso = a.iter().all(|u| a.iter().all(|v| dot(u, &gram.mul_vec(v)).mod_floor(&p) == 0));
    if !iso {
        return Ok(0);
    }
    let rank = if a.is_empty() { 0 } else { modp::rank(a, p) };
    Ok(match rank {
        0 => (1 + chi) * (p + 1),
        1 => 1 + chi,
        2 => 1,
        _ => 0,
    })
}

/// Stratum of an isotropic column K relative to p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Stratum {
    /// K ≢ 0 mod p.
    Unit,
    /// p ‖ K, with ε_p(q(K/p)) = +1, −1 or 0.
    PExact(i64),
    /// p² | K.
    PSquare,
}

fn box_search(m: usize, radius: i64, mut pred: impl FnMut(&[i64]) -> bool) -> Option<Vec<i64>> {
    let side = 2 * radius + 1;
    let total = (side as u64).pow(m as u32);
    // Enumerate in order of increasing max-norm for small witnesses.
    for r in 0..=radius {
        for mut code in 0..total {
            let mut v = vec![0i64; m];
            for x in v.iter_mut() {
                *x = (code % side as u64) as i64 - radius;
                code /= side as u64;
            }
            if v.iter().map(|x| x.abs()).max() == Some(r) && pred(&v) {
                return Some(v);
            }
        }
    }
    None
}

/// Small witness columns K for each stratum that occurs: K ≢ 0 mod p with
/// q(K) ≡ 0 mod p², K = pL for each value of ε_p(q(L)), and K = 0 and p²e₁.
pub fn stratum_samples(q: &QuadraticForm, p: i64) -> Vec<(Stratum, Vec<i64>)> {
    let m = q.m();
    let radius = (p * p).min(if m <= 3 { 25 } else { 6 });
    let mut out = Vec::new();
    if let Some(k) = box_search(m, radius, |v| v.iter().any(|x| x % p != 0) && q.evaluate(v) % (p * p) == 0) {
        out.push((Stratum::Unit, k));
    }
    for eps in [1, -1, 0] {
        if let Some(l) = box_search(m, p, |v| v.iter().any(|x| x % p != 0) && qform::epsilon(q.evaluate(v), p) == eps) {
            out.push((Stratum::PExact(eps), l.iter().map(|x| x * p).collect()));
        }
    }
    out.push((Stratum::PSquare, vec![0; m]));
    let mut e = vec![0; m];
    e[0] = p * p;
    out.push((Stratum::PSquare, e));
    out
}

/// Brute and formula side by side for each K.
pub fn compare(q: &QuadraticForm, p: i64, d: usize, ks: &[Vec<i64>]) -> Result<Vec<IsotropicSumReport>> {
    let cosets = isotropic_cosets(q, d, p)?;
    ks.iter()
        .map(|k| {
            check_k(q, k, p)?;
            let brute = count_dividing(&cosets, k);
            let formula = formula_isotropic_sum_p2(q, d, k, p)?;
            Ok(IsotropicSumReport { q: q.key(), p, d, k: k.clone(), brute, formula, agree: brute == formula })
        })
        .collect()
}

/// CSV with header `q,p,d,K,brute,formula,agree`; K written space-separated.
pub fn reports_to_csv(rows: &[IsotropicSumReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["q", "p", "d", "K", "brute", "formula", "agree"]).expect("in-memory write");
    for r in rows {
        let k = r.k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        w.write_record([
            r.q.clone(),
            r.p.to_string(),
            r.d.to_string(),
            k,
            r.brute.to_string(),
            r.formula.to_string(),
            r.agree.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
