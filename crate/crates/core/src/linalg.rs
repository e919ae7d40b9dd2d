//! Dense complex square matrices and a Hermitian eigensolver.
//!
//! Matrices are stored row-major. Every operator in this crate lives in a
//! basis ordered by descending projection, so index 0 is `m = +j`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex square matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Builds a matrix from row vectors; all rows must have the matrix dimension.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend(row);
        }
        Ok(CMatrix { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    /// Row-major flat data of length `dim * dim`.
    pub fn from_flat(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(CMatrix { dim, data })
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `Tr(A† B)` without forming the product.
    pub fn inner(&self, other: &CMatrix) -> Complex64 {
        debug_assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Complex64 {
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        CMatrix { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, s: Complex64, other: &CMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn kron(&self, other: &CMatrix) -> Self {
        let (p, q) = (self.dim, other.dim);
        let n = p * q;
        let mut m = Self::zeros(n);
        for i in 0..p {
            for j in 0..p {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..q {
                    for l in 0..q {
                        m[(i * q + k, j * q + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    /// Left-associated Kronecker product of a non-empty list.
    pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> Self {
        let mut it = factors.into_iter();
        let first = it.next().expect("kron_all needs at least one factor").clone();
        it.fold(first, |acc, f| acc.kron(f))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from Hermiticity, `max |A - A†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        self.rows().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `U A U†`
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        &(u * self) * &u.adjoint()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        CMatrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|z| format!("{:+.6}{:+.6}i", z.re, z.im)).collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns, aligned with `values`.
    pub vectors: CMatrix,
}

const MAX_QL_ITERATIONS: usize = 64;

/// Eigen-decomposition via Householder tridiagonalization followed by
/// implicit-shift QL on the real tridiagonal form.
///
/// Output ordering is deterministic: ascending eigenvalues; each vector is
/// phased so its first non-negligible component is real positive; vectors
/// inside a degenerate cluster are sorted lexicographically.
pub fn hermitian_eigen(a: &CMatrix, hermitian_tol: f64) -> Result<HermitianEigen> {
    let dev = a.hermiticity_deviation();
    if dev > hermitian_tol {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (max |A - A^H| = {dev:e})"
        )));
    }
    let n = a.dim();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: CMatrix::zeros(0) });
    }

    // Symmetrize so small input asymmetries do not leak into the reduction.
    let mut t = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)].conj());
        }
    }
    let mut q = CMatrix::identity(n);
    tridiagonalize(&mut t, &mut q);

    // Make the subdiagonal real and non-negative with a diagonal phase change.
    let mut phase = vec![ONE; n];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for k in 0..n {
        diag[k] = t[(k, k)].re;
        if k + 1 < n {
            let e = t[(k + 1, k)];
            let r = e.norm();
            off[k] = r;
            phase[k + 1] = if r > 0.0 { phase[k] * (e / r) } else { phase[k] };
        }
    }

    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql2(&mut diag, &mut off, &mut z, n)?;

    // eigenvectors = Q * diag(phase) * Z
    let mut vecs = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = ZERO;
            for k in 0..n {
                acc += q[(i, k)] * phase[k] * z[k * n + j];
            }
            vecs[(i, j)] = acc;
        }
    }

    let scale = diag.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    Ok(canonicalize(diag, vecs, scale))
}

fn tridiagonalize(a: &mut CMatrix, q: &mut CMatrix) {
    let n = a.dim();
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    let mut p = vec![ZERO; n];
    for k in 0..n - 2 {
        let norm: f64 = ((k + 1)..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let unit = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -unit * norm;

        v.iter_mut().for_each(|x| *x = ZERO);
        for i in (k + 1)..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vnorm);

        // A <- H A H with H = I - 2 v v^H
        for i in 0..n {
            p[i] = ((k + 1)..n).map(|j| a[(i, j)] * v[j]).sum();
        }
        let kappa: Complex64 = ((k + 1)..n).map(|i| v[i].conj() * p[i]).sum();
        for i in 0..n {
            for j in 0..n {
                let upd = -2.0 * v[i] * p[j].conj() - 2.0 * p[i] * v[j].conj()
                    + 4.0 * kappa * v[i] * v[j].conj();
                a[(i, j)] += upd;
            }
        }
        // Q <- Q H
        for i in 0..n {
            let qv: Complex64 = ((k + 1)..n).map(|j| q[(i, j)] * v[j]).sum();
            for j in (k + 1)..n {
                q[(i, j)] -= 2.0 * qv * v[j].conj();
            }
        }
    }
}

/// Implicit QL on a real symmetric tridiagonal matrix (EISPACK `tql2`).
/// `off[k]` couples rows `k` and `k + 1`; `z` accumulates the rotations.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence(MAX_QL_ITERATIONS));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * h;
                        z[k * n + i] = c * z[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn canonicalize(values: Vec<f64>, vectors: CMatrix, scale: f64) -> HermitianEigen {
    let n = values.len();
    let mut cols: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|j| {
            let mut col = vectors.column(j);
            let norm: f64 = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let pivot = col.iter().copied().find(|x| x.norm() > 1e-8).unwrap_or(ONE);
            let fix = pivot.conj() / pivot.norm() / norm;
            col.iter_mut().for_each(|x| *x *= fix);
            (values[j], col)
        })
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Order vectors inside each degenerate cluster lexicographically.
    let tol = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cols[end].0 - cols[end - 1].0).abs() <= tol {
            end += 1;
        }
        cols[start..end].sort_by(|a, b| lex_cmp(&b.1, &a.1));
        start = end;
    }

    let mut out = CMatrix::zeros(n);
    let mut vals = Vec::with_capacity(n);
    for (j, (v, col)) in cols.into_iter().enumerate() {
        vals.push(v);
        for (i, x) in col.into_iter().enumerate() {
            out[(i, j)] = x;
        }
    }
    HermitianEigen { values: vals, vectors: out }
}

/// Compares rounded components so that floating noise does not reorder ties.
fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    let key = |x: f64| (x * 1e9).round() as i64;
    for (x, y) in a.iter().zip(b) {
        let ord = key(x.re).cmp(&key(y.re)).then(key(x.im).cmp(&key(y.im)));
        if ord.is_ne() {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Applies `f` to the eigenvalues of a Hermitian matrix: `V f(Λ) V†`.
pub fn hermitian_function(a: &CMatrix, hermitian_tol: f64, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let eig = hermitian_eigen(a, hermitian_tol)?;
    let n = a.dim();
    let mut out = CMatrix::zeros(n);
    for k in 0..n {
        let fk = f(eig.values[k]);
        for i in 0..n {
            let vik = eig.vectors[(i, k)] * fk;
            for j in 0..n {
                out[(i, j)] += vik * eig.vectors[(j, k)].conj();
            }
        }
    }
    Ok(out)
}
