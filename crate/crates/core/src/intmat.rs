//! Exact integer matrices: determinants, adjoints, Smith and Hermite forms,
//! primitivity and completion to unimodular matrices.

use std::fmt;
use std::hash::Hash;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{FromPrimitive, Signed, ToPrimitive};

use crate::{Error, Result};

/// Scalar ring for [`Matrix`]. Implemented by `i64` (fast kernels) and `BigInt`.
pub trait Int:
    Clone + Integer + Signed + FromPrimitive + ToPrimitive + fmt::Debug + fmt::Display + Hash + Send + Sync + 'static
{
}

impl<T> Int for T where
    T: Clone
        + Integer
        + Signed
        + FromPrimitive
        + ToPrimitive
        + fmt::Debug
        + fmt::Display
        + Hash
        + Send
        + Sync
        + 'static
{
}

/// Dense row-major integer matrix. The derived ordering compares shape first,
/// then entries row by row, which is the lexicographic order used for
/// canonical coset representatives.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Serialized as a list of rows; entries beyond 64 bits become decimal strings.
impl<T: Int> serde::Serialize for Matrix<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        struct Entry<'a, T>(&'a T);
        impl<T: Int> serde::Serialize for Entry<'_, T> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                match self.0.to_i64() {
                    Some(v) => s.serialize_i64(v),
                    None => s.serialize_str(&self.0.to_string()),
                }
            }
        }
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for r in self.data.chunks(self.cols) {
            seq.serialize_element(&r.iter().map(Entry).collect::<Vec<_>>())?;
        }
        seq.end()
    }
}

pub type IntMatrix = Matrix<BigInt>;
pub type SMatrix = Matrix<i64>;

impl<T: Int> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![T::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn scalar(n: usize, s: T) -> Self {
        Self::identity(n).scale(&s)
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, e) in entries.iter().enumerate() {
            m.data[i * n + i] = e.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Matrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_cols(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m.data[i * c + j] = v.clone();
            }
        }
        m
    }

    pub fn column(v: &[T]) -> Self {
        Matrix::new(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn to_cols(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn map<U: Int>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_big(&self) -> IntMatrix {
        self.map(|x| BigInt::from_i64(x.to_i64().expect("entry fits i64")).unwrap())
    }

    /// Narrow to `i64`; `None` when an entry does not fit.
    pub fn to_small(&self) -> Option<SMatrix> {
        let data: Option<Vec<i64>> = self.data.iter().map(|x| x.to_i64()).collect();
        data.map(|d| Matrix { rows: self.rows, cols: self.cols, data: d })
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * other.get(k, j).clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "shape mismatch in product");
        (0..self.rows)
            .map(|i| {
                let mut s = T::zero();
                for (k, x) in v.iter().enumerate() {
                    s = s + self.get(i, k).clone() * x.clone();
                }
                s
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x.clone())
    }

    /// `ᵗM · self · M`.
    pub fn congruence(&self, m: &Self) -> Self {
        m.transpose().mul(self).mul(m)
    }

    /// Sub-matrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix::new(rows.len(), cols.len(), data)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn all_divisible_by(&self, d: &T) -> bool {
        self.data.iter().all(|x| x.is_multiple_of(d))
    }

    /// Exact entrywise division; `None` if some entry is not divisible.
    pub fn div_exact(&self, d: &T) -> Option<Self> {
        if d.is_zero() || !self.all_divisible_by(d) {
            return None;
        }
        Some(self.map(|x| x.clone() / d.clone()))
    }

    pub fn reduce_mod(&self, m: &T) -> Self {
        self.map(|x| x.mod_floor(m))
    }

    /// gcd of all entries (0 for the zero matrix).
    pub fn content(&self) -> T {
        self.data.iter().fold(T::zero(), |g, x| g.gcd(x))
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn det(&self) -> T {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.to_rows();
        let mut sign = T::one();
        let mut prev = T::one();
        for k in 0..n {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(k, i);
                        sign = -sign;
                    }
                    None => return T::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = a[i][j].clone() * a[k][k].clone() - a[i][k].clone() * a[k][j].clone();
                    a[i][j] = v / prev.clone();
                }
            }
            prev = a[k][k].clone();
        }
        sign * a[n - 1][n - 1].clone()
    }

    /// Classical adjoint: `self · adjoint = det · 1`.
    pub fn adjoint(&self) -> Self {
        assert!(self.is_square(), "adjoint of a non-square matrix");
        let n = self.rows;
        if n == 1 {
            return Self::identity(1);
        }
        let mut adj = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
                let minor = self.select(&rows, &cols).det();
                let v = if (i + j) % 2 == 0 { minor } else { -minor };
                adj.set(i, j, v);
            }
        }
        adj
    }

    /// `self⁻¹ · other` when it is integral.
    pub fn left_divide(&self, other: &Self) -> Option<Self> {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        self.adjoint().mul(other).div_exact(&d)
    }

    /// `other · self⁻¹` when it is integral.
    pub fn right_divide(&self, other: &Self) -> Option<Self> {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        other.mul(&self.adjoint()).div_exact(&d)
    }

    pub fn is_unimodular(&self) -> bool {
        self.is_square() && self.det().abs().is_one()
    }

    /// gcd of all maximal minors (columns fixed, rows chosen).
    pub fn minor_gcd(&self) -> T {
        let (m, n) = (self.rows, self.cols);
        assert!(m >= n, "minor_gcd expects rows >= cols");
        let cols: Vec<usize> = (0..n).collect();
        let mut g = T::zero();
        for rows in combinations(m, n) {
            g = g.gcd(&self.select(&rows, &cols).det());
            if g.is_one() {
                break;
            }
        }
        g
    }
}

impl<T: Int> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<T: Int> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(","))?;
        }
        write!(f, "]")
    }
}

/// All k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Extended Euclid with a nonnegative gcd: returns `(g, x, y)` with `a x + b y = g`.
pub fn xgcd<T: Int>(a: &T, b: &T) -> (T, T, T) {
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (T::one(), T::zero());
    let (mut t0, mut t1) = (T::zero(), T::one());
    while !r1.is_zero() {
        let q = r0.div_floor(&r1);
        let r2 = r0 - q.clone() * r1.clone();
        r0 = std::mem::replace(&mut r1, r2);
        let s2 = s0 - q.clone() * s1.clone();
        s0 = std::mem::replace(&mut s1, s2);
        let t2 = t0 - q * t1.clone();
        t0 = std::mem::replace(&mut t1, t2);
    }
    if r0.is_negative() {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// Smith-form diagonal of a nonsingular square matrix, d₁ | d₂ | … | dₙ, all positive.
pub fn elementary_divisors<T: Int>(m: &Matrix<T>) -> Result<Vec<T>> {
    if !m.is_square() || m.det().is_zero() {
        return Err(Error::Singular);
    }
    let n = m.rows;
    let mut a = m.to_rows();
    for t in 0..n {
        loop {
            // Bring the smallest nonzero entry of the trailing block to (t,t).
            let mut best: Option<(usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if !a[i][j].is_zero() && best.is_none_or(|(bi, bj): (usize, usize)| a[i][j].abs() < a[bi][bj].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let (bi, bj) = best.ok_or(Error::Singular)?;
            a.swap(t, bi);
            for row in a.iter_mut() {
                row.swap(t, bj);
            }
            let piv = a[t][t].clone();
            let mut clean = true;
            for i in t + 1..n {
                let q = a[i][t].div_floor(&piv);
                if !q.is_zero() {
                    for j in t..n {
                        a[i][j] = a[i][j].clone() - q.clone() * a[t][j].clone();
                    }
                }
                clean &= a[i][t].is_zero();
            }
            for j in t + 1..n {
                let q = a[t][j].div_floor(&piv);
                if !q.is_zero() {
                    for i in t..n {
                        a[i][j] = a[i][j].clone() - q.clone() * a[i][t].clone();
                    }
                }
                clean &= a[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            // Divisibility: fold an offending row into the pivot row.
            let bad = (t + 1..n).find(|&i| (t + 1..n).any(|j| !a[i][j].is_multiple_of(&piv)));
            match bad {
                Some(i) => {
                    for j in t..n {
                        a[t][j] = a[t][j].clone() + a[i][j].clone();
                    }
                }
                None => break,
            }
        }
    }
    Ok((0..n).map(|i| a[i][i].abs()).collect())
}

pub fn adjoint<T: Int>(m: &Matrix<T>) -> Matrix<T> {
    m.adjoint()
}

/// True iff the gcd of all maximal minors is 1.
pub fn is_primitive<T: Int>(m: &Matrix<T>) -> bool {
    m.rows >= m.cols && m.minor_gcd().is_one()
}

/// Extend a primitive m×n matrix to an m×m matrix with determinant ±1 whose
/// first n columns are the input.
pub fn complete_to_unimodular<T: Int>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let (rows, cols) = (m.rows, m.cols);
    if rows < cols || !is_primitive(m) {
        return Err(Error::NotPrimitive);
    }
    // Row-reduce A = U·M to [T; 0] with U unimodular, keeping track of U⁻¹.
    let mut a = m.to_rows();
    let mut uinv = Matrix::<T>::identity(rows);
    for j in 0..cols {
        for i in j + 1..rows {
            let (x0, y0) = (a[j][j].clone(), a[i][j].clone());
            if y0.is_zero() {
                continue;
            }
            let (g, x, y) = xgcd(&x0, &y0);
            let (ag, bg) = (x0 / g.clone(), y0 / g);
            for c in 0..cols {
                let (r1, r2) = (a[j][c].clone(), a[i][c].clone());
                a[j][c] = x.clone() * r1.clone() + y.clone() * r2.clone();
                a[i][c] = ag.clone() * r2 - bg.clone() * r1;
            }
            // U⁻¹ ← U⁻¹ · [[ag, −y],[bg, x]] on columns (j, i).
            for r in 0..rows {
                let (cj, ci) = (uinv.get(r, j).clone(), uinv.get(r, i).clone());
                uinv.set(r, j, cj.clone() * ag.clone() + ci.clone() * bg.clone());
                uinv.set(r, i, ci * x.clone() - cj * y.clone());
            }
        }
    }
    let mut block = Matrix::<T>::identity(rows);
    for i in 0..cols {
        for j in 0..cols {
            block.set(i, j, a[i][j].clone());
        }
    }
    let u = uinv.mul(&block);
    debug_assert!(u.is_unimodular());
    Ok(u)
}

/// Column Hermite normal form of a matrix of full row rank: a square lower
/// triangular basis of the column lattice with positive diagonal and entries
/// left of the diagonal reduced into `[0, pivot)`.
pub fn column_hnf<T: Int>(m: &Matrix<T>) -> Result<Matrix<T>> {
    let (rows, cols) = (m.rows, m.cols);
    let mut c = m.to_cols();
    for i in 0..rows {
        // gcd-combine row i across columns i..
        for j in i + 1..cols {
            let (a, b) = (c[i][i].clone(), c[j][i].clone());
            if b.is_zero() {
                continue;
            }
            let (g, x, y) = xgcd(&a, &b);
            let (ag, bg) = (a / g.clone(), b / g);
            for r in 0..rows {
                let (u, v) = (c[i][r].clone(), c[j][r].clone());
                c[i][r] = x.clone() * u.clone() + y.clone() * v.clone();
                c[j][r] = ag.clone() * v - bg.clone() * u;
            }
        }
        if c[i][i].is_zero() {
            match (i + 1..cols).find(|&j| !c[j][i].is_zero()) {
                Some(j) => c.swap(i, j),
                None => return Err(Error::Singular),
            }
        }
        if c[i][i].is_negative() {
            for r in 0..rows {
                c[i][r] = -c[i][r].clone();
            }
        }
        let piv = c[i][i].clone();
        for k in 0..i {
            let q = c[k][i].div_floor(&piv);
            if !q.is_zero() {
                for r in 0..rows {
                    c[k][r] = c[k][r].clone() - q.clone() * c[i][r].clone();
                }
            }
        }
    }
    Ok(Matrix::from_cols(&c[..rows]))
}

/// Canonical basis of the lattice spanned by the columns of `m` together with `modulus·ℤ^rows`.
pub fn lattice_mod<T: Int>(m: &Matrix<T>, modulus: &T) -> Matrix<T> {
    let rows = m.rows;
    let mut cols = m.to_cols();
    for i in 0..rows {
        let mut e = vec![T::zero(); rows];
        e[i] = modulus.clone();
        cols.push(e);
    }
    column_hnf(&Matrix::from_cols(&cols)).expect("full rank by construction")
}

/// Whether the integer column `v` lies in the column lattice of a square lower
/// triangular basis `h` (as produced by [`column_hnf`]).
pub fn in_lattice<T: Int>(h: &Matrix<T>, v: &[T]) -> bool {
    let n = h.rows;
    let mut r = v.to_vec();
    for i in 0..n {
        let piv = h.get(i, i);
        if !r[i].is_multiple_of(piv) {
            return false;
        }
        let q = r[i].clone() / piv.clone();
        if q.is_zero() {
            continue;
        }
        for (k, rk) in r.iter_mut().enumerate().skip(i) {
            *rk = rk.clone() - q.clone() * h.get(k, i).clone();
        }
    }
    true
}

/// Linear algebra over the prime field 𝔽_p on `i64` data.
pub mod modp {
    use num_integer::Integer;

    pub fn inv(a: i64, p: i64) -> i64 {
        let (g, x, _) = super::xgcd(&a.mod_floor(&p), &p);
        assert_eq!(g, 1, "not invertible mod p");
        x.mod_floor(&p)
    }

    /// Reduced row echelon form of the given rows; returns (rows, pivot columns).
    pub fn rref(rows: &[Vec<i64>], p: i64) -> (Vec<Vec<i64>>, Vec<usize>) {
        let mut a: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|x| x.mod_floor(&p)).collect()).collect();
        let ncols = a.first().map_or(0, |r| r.len());
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            let Some(k) = (r..a.len()).find(|&k| a[k][c] != 0) else { continue };
            a.swap(r, k);
            let s = inv(a[r][c], p);
            for x in a[r].iter_mut() {
                *x = (*x * s).mod_floor(&p);
            }
            for k in 0..a.len() {
                if k != r && a[k][c] != 0 {
                    let f = a[k][c];
                    for j in 0..ncols {
                        a[k][j] = (a[k][j] - f * a[r][j]).mod_floor(&p);
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == a.len() {
                break;
            }
        }
        a.truncate(r);
        (a, pivots)
    }

    pub fn rank(rows: &[Vec<i64>], p: i64) -> usize {
        rref(rows, p).1.len()
    }

    /// Basis of {x : A x ≡ 0 mod p} for A given by rows over `ncols` unknowns.
    pub fn nullspace(rows: &[Vec<i64>], ncols: usize, p: i64) -> Vec<Vec<i64>> {
        let (r, piv) = if rows.is_empty() { (Vec::new(), Vec::new()) } else { rref(rows, p) };
        let free: Vec<usize> = (0..ncols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![0; ncols];
                v[f] = 1;
                for (i, &pc) in piv.iter().enumerate() {
                    v[pc] = (-r[i][f]).mod_floor(&p);
                }
                v
            })
            .collect()
    }

    /// Solve A x ≡ b mod p (A by rows); any one solution.
    pub fn solve(rows: &[Vec<i64>], b: &[i64], p: i64) -> Option<Vec<i64>> {
        let ncols = rows.first().map_or(0, |r| r.len());
        let aug: Vec<Vec<i64>> = rows
            .iter()
            .zip(b)
            .map(|(r, &bi)| {
                let mut r = r.clone();
                r.push(bi);
                r
            })
            .collect();
        let (r, piv) = rref(&aug, p);
        if piv.contains(&ncols) {
            return None;
        }
        let mut x = vec![0; ncols];
        for (i, &pc) in piv.iter().enumerate() {
            x[pc] = r[i][ncols];
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: Vec<Vec<i64>>) -> SMatrix {
        Matrix::from_rows(rows)
    }

    #[test]
    fn divisors_of_diagonal_and_scalar() {
        assert_eq!(elementary_divisors(&SMatrix::diag(&[1, 3, 9])).unwrap(), vec![1, 3, 9]);
        assert_eq!(elementary_divisors(&SMatrix::scalar(3, 3)).unwrap(), vec![3, 3, 3]);
        assert_eq!(elementary_divisors(&SMatrix::diag(&[9, 3, 1])).unwrap(), vec![1, 3, 9]);
        assert_eq!(elementary_divisors(&m(vec![vec![2, 0], vec![0, 3]])).unwrap(), vec![1, 6]);
        assert!(matches!(elementary_divisors(&m(vec![vec![1, 2], vec![2, 4]])), Err(Error::Singular)));
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(SMatrix::identity(3).adjoint(), SMatrix::identity(3));
        assert_eq!(SMatrix::diag(&[2, 3, 5]).adjoint(), SMatrix::diag(&[15, 10, 6]));
        let a = m(vec![vec![1, 2, 3], vec![0, 4, 5], vec![1, 0, 6]]);
        assert_eq!(a.mul(&a.adjoint()), SMatrix::scalar(3, a.det()));
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive(&m(vec![vec![2], vec![3]])));
        assert!(!is_primitive(&m(vec![vec![2], vec![4]])));
        assert!(!is_primitive(&m(vec![vec![1, 0], vec![0, 2], vec![0, 0]])));
    }

    #[test]
    fn completion_examples() {
        let e1 = m(vec![vec![1], vec![0], vec![0]]);
        assert_eq!(complete_to_unimodular(&e1).unwrap(), SMatrix::identity(3));
        let c = complete_to_unimodular(&m(vec![vec![2], vec![3]])).unwrap();
        assert_eq!(c, m(vec![vec![2, -1], vec![3, -1]]));
        let v = m(vec![vec![6], vec![10], vec![15]]);
        let u = complete_to_unimodular(&v).unwrap();
        assert_eq!(u.col(0), vec![6, 10, 15]);
        assert!(u.is_unimodular());
        assert!(matches!(complete_to_unimodular(&m(vec![vec![2], vec![4]])), Err(Error::NotPrimitive)));
    }

    #[test]
    fn hnf_membership() {
        let g = m(vec![vec![1, 0], vec![2, 3]]);
        let h = lattice_mod(&g, &9);
        assert!(in_lattice(&h, &[1, 2]));
        assert!(in_lattice(&h, &[0, 3]));
        assert!(in_lattice(&h, &[0, 9]));
        assert!(!in_lattice(&h, &[0, 1]));
        assert_eq!(h.det().abs(), 3);
    }

    #[test]
    fn bigint_agrees_with_i64() {
        let a = m(vec![vec![3, 1, 4], vec![1, 5, 9], vec![2, 6, 5]]);
        assert_eq!(a.to_big().det(), BigInt::from(a.det()));
        let ed: Vec<i64> = elementary_divisors(&a.to_big()).unwrap().iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(ed, elementary_divisors(&a).unwrap());
    }

    #[test]
    fn modp_nullspace() {
        let ns = modp::nullspace(&[vec![1, 1, 0]], 3, 5);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert_eq!((v[0] + v[1]) % 5, 0);
        }
    }
}
