//! Representations R(q,a), automorphs R(q,aq′), unit groups and coset decompositions.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::intmat::SMatrix;
use crate::qform::QuadraticForm;
use crate::{Error, Result};

/// An integer matrix M with Q[M] = a·Q′.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorph {
    pub matrix: SMatrix,
    pub source: Arc<QuadraticForm>,
    pub target: Arc<QuadraticForm>,
    pub multiplier: i64,
}

#[derive(Clone, Debug)]
pub struct UnitGroup {
    pub form: QuadraticForm,
    pub elements: Vec<SMatrix>,
}

impl UnitGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// Classes E(q)·M, written E(q)\R.
    Left,
    /// Classes M·E(q′), written R/E(q′).
    Right,
}

#[derive(Clone, Debug)]
pub struct CosetList {
    pub representatives: Vec<SMatrix>,
    pub side: Side,
}

impl CosetList {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

/// q(x) = Σ_i d_i (x_i + Σ_{j>i} μ_ij x_j)², exact over ℚ.
struct Ldl {
    d: Vec<BigRational>,
    mu: Vec<Vec<BigRational>>,
}

fn ldl(q: &QuadraticForm) -> Ldl {
    let m = q.m();
    let two = BigRational::from_integer(BigInt::from(2));
    let mut a: Vec<Vec<BigRational>> = (0..m)
        .map(|i| (0..m).map(|j| BigRational::from_integer(BigInt::from(*q.gram().get(i, j))) / two.clone()).collect())
        .collect();
    let mut d = vec![BigRational::zero(); m];
    let mut mu = vec![vec![BigRational::zero(); m]; m];
    for i in 0..m {
        d[i] = a[i][i].clone();
        for j in i + 1..m {
            mu[i][j] = a[i][j].clone() / d[i].clone();
        }
        for r in i + 1..m {
            for c in i + 1..m {
                let v = a[r][c].clone() - mu[i][r].clone() * d[i].clone() * mu[i][c].clone();
                a[r][c] = v;
            }
        }
    }
    Ldl { d, mu }
}

fn floor_rat(x: &BigRational) -> i64 {
    use num_traits::ToPrimitive;
    x.floor().to_integer().to_i64().expect("coordinate fits i64")
}

fn check_pd(q: &QuadraticForm) -> Result<()> {
    if q.is_positive_definite() {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// Integers x with d·(x − c)² ≤ budget, by walking outward from the center.
fn level_range(d: &BigRational, c: &BigRational, budget: &BigRational) -> Vec<i64> {
    let ok = |x: i64| {
        let t = BigRational::from_integer(BigInt::from(x)) - c.clone();
        d.clone() * t.clone() * t <= *budget
    };
    let x0 = floor_rat(c);
    let mut out = Vec::new();
    let mut x = x0;
    while ok(x) {
        out.push(x);
        x -= 1;
    }
    out.reverse();
    let mut x = x0 + 1;
    while ok(x) {
        out.push(x);
        x += 1;
    }
    out
}

/// Visit every x with q(x) ≤ n_max, calling `f(x, q(x))`. The outermost
/// coordinate is split across `rayon` workers; each worker folds into its own
/// accumulator created by `init`, and accumulators are returned in coordinate order.
pub fn fold_vectors<A, I, F>(q: &QuadraticForm, n_max: i64, init: I, f: F) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &[i64], i64) + Sync,
{
    check_pd(q)?;
    let m = q.m();
    let l = ldl(q);
    let budget = BigRational::from_integer(BigInt::from(n_max));
    let zero = BigRational::zero();
    let outer = if m == 1 { vec![0] } else { level_range(&l.d[m - 1], &zero, &budget) };
    let q0 = q.q0();
    let q11 = *q0.get(0, 0);

    let work = |xm: i64| -> A {
        let mut acc = init();
        let mut x = vec![0i64; m];
        if m == 1 {
            for v in level_range(&l.d[0], &zero, &budget) {
                x[0] = v;
                f(&mut acc, &x, q.evaluate(&x));
            }
            return acc;
        }
        x[m - 1] = xm;
        let first = {
            let t = BigRational::from_integer(BigInt::from(xm));
            budget.clone() - l.d[m - 1].clone() * t.clone() * t
        };
        recurse(q, &l, q11, n_max, m - 1, first, &mut x, &mut acc, &f);
        acc
    };
    Ok(outer.into_par_iter().map(work).collect())
}

#[allow(clippy::too_many_arguments)]
fn recurse<A, F>(
    q: &QuadraticForm,
    l: &Ldl,
    q11: i64,
    n_max: i64,
    level: usize,
    budget: BigRational,
    x: &mut Vec<i64>,
    acc: &mut A,
    f: &F,
) where
    F: Fn(&mut A, &[i64], i64),
{
    let m = q.m();
    if level == 1 {
        // x₁ innermost: q = q11 x₁² + L x₁ + C with integer L, C.
        let q0 = q.q0();
        let lin: i64 = (1..m).map(|j| q0.get(0, j) * x[j]).sum();
        x[0] = 0;
        let c = q.evaluate(x);
        let val = |t: i64| q11 * t * t + lin * t + c;
        let start = Integer::div_floor(&(-lin), &(2 * q11));
        let mut t = start;
        while val(t) <= n_max {
            x[0] = t;
            f(acc, x, val(t));
            t -= 1;
        }
        let mut t = start + 1;
        while val(t) <= n_max {
            x[0] = t;
            f(acc, x, val(t));
            t += 1;
        }
        x[0] = 0;
        return;
    }
    let i = level - 1;
    let mut c = BigRational::zero();
    for j in level..m {
        c -= l.mu[i][j].clone() * BigRational::from_integer(BigInt::from(x[j]));
    }
    for v in level_range(&l.d[i], &c, &budget) {
        x[i] = v;
        let t = BigRational::from_integer(BigInt::from(v)) - c.clone();
        let rest = budget.clone() - l.d[i].clone() * t.clone() * t;
        recurse(q, l, q11, n_max, level - 1, rest, x, acc, f);
    }
    x[i] = 0;
}

/// All X with q(X) = a, sorted lexicographically.
pub fn representations(q: &QuadraticForm, a: i64) -> Result<Vec<Vec<i64>>> {
    if a < 0 {
        check_pd(q)?;
        return Ok(Vec::new());
    }
    let parts = fold_vectors(q, a, Vec::new, |acc: &mut Vec<Vec<i64>>, x, n| {
        if n == a {
            acc.push(x.to_vec());
        }
    })?;
    let mut out: Vec<Vec<i64>> = parts.into_iter().flatten().collect();
    out.sort();
    Ok(out)
}

/// All X with q(X) ≤ n_max bucketed by value; each bucket sorted.
pub fn representations_upto(q: &QuadraticForm, n_max: i64) -> Result<Vec<Vec<Vec<i64>>>> {
    let size = (n_max.max(0) + 1) as usize;
    let parts = fold_vectors(q, n_max, Vec::new, |acc: &mut Vec<(i64, Vec<i64>)>, x, n| {
        acc.push((n, x.to_vec()));
    })?;
    let mut out = vec![Vec::new(); size];
    for (n, x) in parts.into_iter().flatten() {
        out[n as usize].push(x);
    }
    for b in out.iter_mut() {
        b.sort();
    }
    Ok(out)
}

/// r(q,0), …, r(q,n_max).
pub fn representation_counts(q: &QuadraticForm, n_max: i64) -> Result<Vec<u64>> {
    let size = (n_max.max(0) + 1) as usize;
    let parts = fold_vectors(
        q,
        n_max,
        || vec![0u64; size],
        |acc: &mut Vec<u64>, _x, n| {
            acc[n as usize] += 1;
        },
    )?;
    let mut out = vec![0u64; size];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    Ok(out)
}

/// All M with Q[M] = a·Q_target, by column backtracking over representation lists.
pub fn automorphs(q: &QuadraticForm, target: &QuadraticForm, a: i64) -> Result<Vec<Automorph>> {
    check_pd(q)?;
    check_pd(target)?;
    if q.m() != target.m() {
        return Err(Error::DimensionMismatch);
    }
    if q.det() != target.det() {
        return Err(Error::DeterminantMismatch);
    }
    let source = Arc::new(q.clone());
    let tgt = Arc::new(target.clone());
    Ok(automorph_matrices(q, target, a)?
        .into_iter()
        .map(|matrix| Automorph { matrix, source: source.clone(), target: tgt.clone(), multiplier: a })
        .collect())
}

/// Matrices of [`automorphs`], sorted. No determinant precondition.
pub fn automorph_matrices(q: &QuadraticForm, target: &QuadraticForm, a: i64) -> Result<Vec<SMatrix>> {
    check_pd(q)?;
    let m = q.m();
    let tg = target.gram();
    let mut cands: Vec<Vec<(Vec<i64>, Vec<i64>)>> = Vec::with_capacity(m);
    let mut cache: HashMap<i64, Vec<Vec<i64>>> = HashMap::new();
    for j in 0..m {
        let norm = a * tg.get(j, j) / 2;
        let reps = match cache.get(&norm) {
            Some(r) => r.clone(),
            None => {
                let r = representations(q, norm)?;
                cache.insert(norm, r.clone());
                r
            }
        };
        cands.push(
            reps.into_iter()
                .map(|v| {
                    let qv = q.gram().mul_vec(&v);
                    (v, qv)
                })
                .collect(),
        );
    }
    let want: Vec<Vec<i64>> = (0..m).map(|i| (0..m).map(|j| a * tg.get(i, j)).collect()).collect();

    fn search(
        j: usize,
        chosen: &mut Vec<usize>,
        cands: &[Vec<(Vec<i64>, Vec<i64>)>],
        want: &[Vec<i64>],
        out: &mut Vec<Vec<usize>>,
    ) {
        let m = cands.len();
        if j == m {
            out.push(chosen.clone());
            return;
        }
        for (idx, (_, qv)) in cands[j].iter().enumerate() {
            let fits = (0..j).all(|i| {
                let vi = &cands[i][chosen[i]].0;
                vi.iter().zip(qv).map(|(x, y)| x * y).sum::<i64>() == want[i][j]
            });
            if fits {
                chosen.push(idx);
                search(j + 1, chosen, cands, want, out);
                chosen.pop();
            }
        }
    }

    let first = cands.first().map_or(0, |c| c.len());
    let picks: Vec<Vec<usize>> = (0..first)
        .into_par_iter()
        .flat_map_iter(|i0| {
            let mut out = Vec::new();
            let mut chosen = vec![i0];
            search(1, &mut chosen, &cands, &want, &mut out);
            out
        })
        .collect();
    let mut mats: Vec<SMatrix> = picks
        .into_iter()
        .map(|ix| {
            let cols: Vec<Vec<i64>> = ix.iter().enumerate().map(|(j, &k)| cands[j][k].0.clone()).collect();
            SMatrix::from_cols(&cols)
        })
        .collect();
    mats.sort();
    Ok(mats)
}

/// E(q), memoized per form.
pub fn unit_group(q: &QuadraticForm) -> Result<Arc<UnitGroup>> {
    static CACHE: OnceLock<Mutex<HashMap<QuadraticForm, Arc<UnitGroup>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(g) = cache.lock().expect("unit group cache").get(q) {
        return Ok(g.clone());
    }
    let elements = automorph_matrices(q, q, 1)?;
    let g = Arc::new(UnitGroup { form: q.clone(), elements });
    cache.lock().expect("unit group cache").insert(q.clone(), g.clone());
    Ok(g)
}

/// Split by content: primitive (entry gcd 1) and the rest.
pub fn primitive_filter(list: &[Automorph]) -> (Vec<Automorph>, Vec<Automorph>) {
    list.iter().cloned().partition(|a| a.matrix.content() == 1)
}

/// Lexicographically least element of E·M (left) or M·E (right).
pub fn canonical_coset_rep(m: &SMatrix, e: &UnitGroup, side: Side) -> SMatrix {
    e.elements
        .iter()
        .map(|u| match side {
            Side::Left => u.mul(m),
            Side::Right => m.mul(u),
        })
        .min()
        .expect("unit group is nonempty")
}

/// Canonical representatives of the cosets met by `mats`, sorted.
pub fn coset_decompose_matrices(mats: &[SMatrix], e: &UnitGroup, side: Side) -> CosetList {
    let mut seen: HashSet<SMatrix> = HashSet::new();
    let mut reps = Vec::new();
    let mut sorted: Vec<&SMatrix> = mats.iter().collect();
    sorted.sort();
    for m in sorted {
        if seen.contains(m) {
            continue;
        }
        let coset: Vec<SMatrix> = e
            .elements
            .iter()
            .map(|u| match side {
                Side::Left => u.mul(m),
                Side::Right => m.mul(u),
            })
            .collect();
        let rep = coset.iter().min().expect("nonempty").clone();
        seen.extend(coset);
        reps.push(rep);
    }
    reps.sort();
    reps.dedup();
    CosetList { representatives: reps, side }
}

pub fn coset_decompose(list: &[Automorph], e: &UnitGroup, side: Side) -> Result<CosetList> {
    if let Some(a) = list.first() {
        let expected = match side {
            Side::Left => &*a.source,
            Side::Right => &*a.target,
        };
        if *expected != e.form {
            return Err(Error::ParentMismatch);
        }
    }
    let mats: Vec<SMatrix> = list.iter().map(|a| a.matrix.clone()).collect();
    Ok(coset_decompose_matrices(&mats, e, side))
}

/// μ_q(L) = |{U ∈ E(q) : UL = L}|.
pub fn stabilizer_order(q: &QuadraticForm, l: &[i64]) -> Result<usize> {
    let e = unit_group(q)?;
    Ok(e.elements.iter().filter(|u| u.mul_vec(l) == l).count())
}

/// An E(q)-orbit: least element and size.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Orbit {
    pub rep: Vec<i64>,
    pub size: usize,
}

/// Orbits of E on a set of vectors closed under E; sorted by representative.
pub fn orbits(vectors: &[Vec<i64>], e: &UnitGroup) -> Vec<Orbit> {
    let mut sorted: Vec<&Vec<i64>> = vectors.iter().collect();
    sorted.sort();
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut out = Vec::new();
    for v in sorted {
        if seen.contains(v) {
            continue;
        }
        let orbit: HashSet<Vec<i64>> = e.elements.iter().map(|u| u.mul_vec(v)).collect();
        let rep = orbit.iter().min().expect("nonempty").clone();
        out.push(Orbit { rep, size: orbit.len() });
        seen.extend(orbit);
    }
    out.sort();
    out
}

/// Lexicographically least element of the E-orbit of v.
pub fn orbit_rep(v: &[i64], e: &UnitGroup) -> Vec<i64> {
    e.elements.iter().map(|u| u.mul_vec(v)).min().expect("nonempty")
}

/// Whether every element of `e` preserves the form (sanity check for caches and tests).
pub fn is_unit_group(e: &UnitGroup) -> bool {
    e.elements.iter().all(|u| u.is_unimodular() && e.form.gram().congruence(u) == *e.form.gram())
}

/// ᵗM Q M = a Q′ and |det M| = a^{m/2} (m even) or a^{(m−1)/2}·√a (m odd).
pub fn is_automorph(m: &SMatrix, q: &QuadraticForm, target: &QuadraticForm, a: i64) -> bool {
    if q.gram().congruence(m) != target.gram().scale(&a) {
        return false;
    }
    let d = BigInt::from(m.det()).abs();
    let lhs = d.clone() * d;
    lhs == BigInt::from(a).pow(q.m() as u32) * BigInt::one()
}

/// Counts per coset, keyed by canonical representative.
pub fn coset_sizes(mats: &[SMatrix], e: &UnitGroup, side: Side) -> BTreeMap<SMatrix, usize> {
    let mut out = BTreeMap::new();
    for m in mats {
        *out.entry(canonical_coset_rep(m, e, side)).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_representation_counts() {
        let q3 = QuadraticForm::sum_of_squares(3);
        assert_eq!(representations(&q3, 1).unwrap().len(), 6);
        assert_eq!(representations(&q3, 9).unwrap().len(), 30);
        let q4 = QuadraticForm::sum_of_squares(4);
        assert_eq!(representations(&q4, 1).unwrap().len(), 8);
        assert_eq!(representation_counts(&q3, 3).unwrap(), vec![1, 6, 12, 8]);
        let r = representations(&q3, 1).unwrap();
        let mut s = r.clone();
        s.sort();
        assert_eq!(r, s);
    }

    #[test]
    fn brute_box_oracle_agrees() {
        // Independent box search for a non-diagonal form.
        let q = QuadraticForm::new(3, &[vec![2, 1, -1], vec![3, 1], vec![4]]).unwrap();
        let counts = representation_counts(&q, 40).unwrap();
        let mut brute = vec![0u64; 41];
        for x in -12i64..=12 {
            for y in -12i64..=12 {
                for z in -12i64..=12 {
                    let v = q.evaluate(&[x, y, z]);
                    if v <= 40 {
                        brute[v as usize] += 1;
                    }
                }
            }
        }
        assert_eq!(counts, brute);
    }

    #[test]
    fn indefinite_rejected() {
        let q = QuadraticForm::diagonal(&[1, -1, 1]).unwrap();
        assert_eq!(representations(&q, 1).unwrap_err(), Error::NotPositiveDefinite);
        assert!(unit_group(&q).is_err());
    }

    #[test]
    fn unit_group_orders() {
        assert_eq!(unit_group(&QuadraticForm::sum_of_squares(3)).unwrap().order(), 48);
        assert_eq!(unit_group(&QuadraticForm::diagonal(&[1, 2, 3]).unwrap()).unwrap().order(), 8);
        let e4 = unit_group(&QuadraticForm::sum_of_squares(4)).unwrap();
        assert_eq!(e4.order(), 384);
        assert!(is_unit_group(&e4));
    }

    #[test]
    fn automorph_classes() {
        let q = QuadraticForm::sum_of_squares(3);
        let e = unit_group(&q).unwrap();
        let all = automorphs(&q, &q, 9).unwrap();
        let (prim, imprim) = primitive_filter(&all);
        assert_eq!(imprim.len(), 48);
        assert!(imprim.iter().all(|a| a.matrix.content() == 3));
        let cl = coset_decompose(&prim, &e, Side::Right).unwrap();
        assert_eq!(cl.len(), 4);
        let cl = coset_decompose(&prim, &e, Side::Left).unwrap();
        assert_eq!(cl.len(), 4);
        let units = automorphs(&q, &q, 1).unwrap();
        assert_eq!(coset_decompose(&units, &e, Side::Left).unwrap().len(), 1);
        for a in &prim {
            assert!(is_automorph(&a.matrix, &q, &q, 9));
            assert_eq!(crate::intmat::elementary_divisors(&a.matrix).unwrap(), vec![1, 3, 9]);
        }

        let n = QuadraticForm::sum_of_squares(4);
        let en = unit_group(&n).unwrap();
        let r3 = automorphs(&n, &n, 3).unwrap();
        assert_eq!(coset_decompose(&r3, &en, Side::Right).unwrap().len(), 8);
    }

    #[test]
    fn determinant_mismatch() {
        let q = QuadraticForm::sum_of_squares(3);
        let q2 = QuadraticForm::diagonal(&[1, 1, 2]).unwrap();
        assert_eq!(automorphs(&q, &q2, 1).unwrap_err(), Error::DeterminantMismatch);
    }

    #[test]
    fn stabilizers() {
        let q = QuadraticForm::sum_of_squares(3);
        assert_eq!(stabilizer_order(&q, &[0, 0, 0]).unwrap(), 48);
        assert_eq!(stabilizer_order(&q, &[1, 0, 0]).unwrap(), 8);
        assert_eq!(stabilizer_order(&q, &[1, 2, 2]).unwrap(), 2);
    }

    #[test]
    fn orbit_stabilizer_sums() {
        let q = QuadraticForm::new(3, &[vec![1, 1, 0], vec![1, 0], vec![2]]).unwrap();
        let e = unit_group(&q).unwrap();
        for a in 0..20 {
            let r = representations(&q, a).unwrap();
            let orbs = orbits(&r, &e);
            let total: usize = orbs.iter().map(|o| o.size).sum();
            assert_eq!(total, r.len());
            for o in &orbs {
                assert_eq!(o.size * stabilizer_order(&q, &o.rep).unwrap(), e.order());
            }
        }
    }
}
