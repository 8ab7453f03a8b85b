//! Dense linear algebra kernels sized for desk-scale spectral studies.
//!
//! Everything here is plain `f64` on heap-allocated storage: a row-major
//! dense matrix, a packed symmetric (lower triangle) matrix, Cholesky
//! factorization, a Householder QR nullspace for small constraint blocks,
//! and a full symmetric eigensolver (tridiagonalization followed by
//! implicit-shift QL iteration).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::num;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    pub fn transpose(&self) -> DMat {
        DMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`, cache-friendly i-k-j ordering.
    pub fn mul(&self, other: &DMat) -> DMat {
        assert_eq!(self.cols, other.rows);
        let mut out = DMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// `selfᵀ * other`.
    pub fn tr_mul(&self, other: &DMat) -> DMat {
        assert_eq!(self.rows, other.rows);
        let mut out = DMat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(k, i);
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = out.row_mut(i);
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x.iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect()
    }

    /// `selfᵀ x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (yj, a) in y.iter_mut().zip(self.row(i).iter()) {
                *yj += xi * a;
            }
        }
        y
    }

    pub fn kron(&self, other: &DMat) -> DMat {
        let mut out = DMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.get(i1, j1);
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out.set(
                            i1 * other.rows + i2,
                            j1 * other.cols + j2,
                            a * other.get(i2, j2),
                        );
                    }
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// Symmetric matrix stored as packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(i, j)] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[packed_index(i, j)] += v;
    }

    pub fn to_dense(&self) -> DMat {
        DMat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Packs the lower triangle of a dense matrix, averaging the two
    /// triangles to kill round-off asymmetry.
    pub fn from_dense_symmetrized(a: &DMat) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.data[packed_index(i, j)] = 0.5 * (a.get(i, j) + a.get(j, i));
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, x.len());
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * (i + 1) / 2..i * (i + 1) / 2 + i + 1];
            let mut acc = 0.0;
            for (j, &a) in row.iter().enumerate() {
                acc += a * x[j];
                if j < i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        dot(x, &y)
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &SymMat) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    /// Rank-one update `self += s * v vᵀ`.
    pub fn rank1_update(&mut self, s: f64, v: &[f64]) {
        assert_eq!(self.n, v.len());
        for i in 0..self.n {
            if v[i] == 0.0 && s != 0.0 {
                // still need the row walk only when v[i] != 0
                continue;
            }
            let svi = s * v[i];
            let base = i * (i + 1) / 2;
            for j in 0..=i {
                self.data[base + j] += svi * v[j];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}

/// Kronecker product of two symmetric matrices; the result is symmetric.
pub fn kron_sym(a: &SymMat, b: &SymMat) -> SymMat {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = SymMat::zeros(n);
    for i in 0..n {
        let (i1, i2) = (i / nb, i % nb);
        for j in 0..=i {
            let (j1, j2) = (j / nb, j % nb);
            let v = a.get(i1, j1) * b.get(i2, j2);
            if v != 0.0 {
                out.data[packed_index(i, j)] = v;
            }
        }
    }
    out
}

/// Adds `s * (Cx ⊗ Cyᵀ + Cxᵀ ⊗ Cy)` to `out`; the bracket is symmetric for
/// any square `cx`, `cy`.
pub fn add_kron_sym_pair(out: &mut SymMat, s: f64, cx: &DMat, cy: &DMat) {
    let (nx, ny) = (cx.nrows(), cy.nrows());
    assert_eq!(cx.ncols(), nx);
    assert_eq!(cy.ncols(), ny);
    assert_eq!(out.dim(), nx * ny);
    let n = nx * ny;
    for i in 0..n {
        let (i1, i2) = (i / ny, i % ny);
        for j in 0..=i {
            let (j1, j2) = (j / ny, j % ny);
            let v = cx.get(i1, j1) * cy.get(j2, i2) + cx.get(j1, i1) * cy.get(i2, j2);
            if v != 0.0 {
                out.data[packed_index(i, j)] += s * v;
            }
        }
    }
}

/// Congruence transform `Eᵀ A E` for symmetric `A`.
pub fn congruence(e: &DMat, a: &SymMat) -> SymMat {
    assert_eq!(e.nrows(), a.dim());
    let ad = a.to_dense();
    let t = ad.mul(e);
    let full = e.tr_mul(&t);
    SymMat::from_dense_symmetrized(&full)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    num::sqrt(dot(a, a))
}

/// Cholesky factorization `A = L Lᵀ` with `L` stored packed lower.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMat) -> Result<Self> {
        let n = a.dim();
        let mut l = a.data.clone();
        for j in 0..n {
            let jj = packed_index(j, j);
            let mut s = l[jj];
            for k in 0..j {
                let v = l[packed_index(j, k)];
                s -= v * v;
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let d = num::sqrt(s);
            l[jj] = d;
            for i in j + 1..n {
                let mut s = l[packed_index(i, j)];
                for k in 0..j {
                    s -= l[packed_index(i, k)] * l[packed_index(j, k)];
                }
                l[packed_index(i, j)] = s / d;
            }
        }
        Ok(Self { n, l })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L y = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let base = i * (i + 1) / 2;
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[base + k] * b[k];
            }
            b[i] = s / self.l[base + i];
        }
    }

    /// Solves `Lᵀ y = b` in place.
    pub fn backward_solve(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..self.n {
                s -= self.l[packed_index(k, i)] * b[k];
            }
            b[i] = s / self.l[packed_index(i, i)];
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward_solve(b);
        self.backward_solve(b);
    }

    /// Forms `L⁻¹ A L⁻ᵀ` for symmetric `A` (the standard reduction of the
    /// generalized problem to an ordinary symmetric one).
    pub fn reduce(&self, a: &SymMat) -> DMat {
        let n = self.n;
        assert_eq!(a.dim(), n);
        // X = L⁻¹ A: forward-solve each column of A.
        let mut x = a.to_dense();
        for j in 0..n {
            let mut col = x.col(j);
            self.forward_solve(&mut col);
            x.set_col(j, &col);
        }
        // B = X L⁻ᵀ = (L⁻¹ Xᵀ)ᵀ.
        let mut xt = x.transpose();
        for j in 0..n {
            let mut col = xt.col(j);
            self.forward_solve(&mut col);
            xt.set_col(j, &col);
        }
        xt.transpose()
    }
}

/// LU solve with partial pivoting for small dense systems.
pub fn solve_dense(a: &DMat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut x: Vec<f64> = b.to_vec();
    for k in 0..n {
        let mut piv = k;
        let mut best = m.get(k, k).abs();
        for i in k + 1..n {
            let v = m.get(i, k).abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::Estimation(alloc::format!(
                "singular system (pivot {k})"
            )));
        }
        if piv != k {
            for j in 0..n {
                let t = m.get(k, j);
                m.set(k, j, m.get(piv, j));
                m.set(piv, j, t);
            }
            x.swap(k, piv);
        }
        let d = m.get(k, k);
        for i in k + 1..n {
            let f = m.get(i, k) / d;
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m.add_to(i, j, -f * m.get(k, j));
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m.get(i, j) * x[j];
        }
        x[i] = s / m.get(i, i);
    }
    Ok(x)
}

/// Orthonormal basis of the nullspace of a full-row-rank matrix
/// `c` (m×s, m ≤ s), via Householder QR of `cᵀ`. With `m == s` the basis
/// is empty: the constraints consume the whole block.
pub fn nullspace(c: &DMat) -> DMat {
    let m = c.nrows();
    let s = c.ncols();
    assert!(m <= s, "more constraints than columns in the block");
    let mut a = c.transpose(); // s × m
    let mut q = DMat::identity(s);
    for k in 0..m {
        // Householder vector for column k.
        let mut norm = 0.0;
        for i in k..s {
            norm += a.get(i, k) * a.get(i, k);
        }
        let norm = num::sqrt(norm);
        if norm == 0.0 {
            continue;
        }
        let alpha = if a.get(k, k) >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; s];
        v[k] = a.get(k, k) - alpha;
        for i in k + 1..s {
            v[i] = a.get(i, k);
        }
        let vtv = dot(&v, &v);
        if vtv == 0.0 {
            continue;
        }
        // Apply H = I - 2vvᵀ/vᵀv to a (left) and accumulate into q.
        for j in k..m {
            let mut w = 0.0;
            for i in k..s {
                w += v[i] * a.get(i, j);
            }
            let w = 2.0 * w / vtv;
            for i in k..s {
                a.add_to(i, j, -w * v[i]);
            }
        }
        for j in 0..s {
            let mut w = 0.0;
            for i in k..s {
                w += v[i] * q.get(i, j);
            }
            let w = 2.0 * w / vtv;
            for i in k..s {
                q.add_to(i, j, -w * v[i]);
            }
        }
    }
    // Rows m..s of the accumulated Qᵀ span the kernel; return as columns.
    DMat::from_fn(s, s - m, |i, j| q.get(m + j, i))
}

/// Full eigendecomposition of a symmetric matrix: Householder
/// tridiagonalization followed by implicit-shift QL iteration.
/// Returns eigenvalues ascending and the matching orthonormal
/// eigenvectors as columns.
pub fn sym_eigen(a: &SymMat) -> Result<(Vec<f64>, DMat)> {
    let n = a.dim();
    if n == 0 {
        return Ok((Vec::new(), DMat::zeros(0, 0)));
    }
    let mut z = a.to_dense();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, &mut z)?;
    // Sort ascending, permuting eigenvector columns.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(core::cmp::Ordering::Equal));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = DMat::zeros(n, n);
    for (jnew, &jold) in order.iter().enumerate() {
        for i in 0..n {
            vecs.set(i, jnew, z.get(i, jold));
        }
    }
    Ok((vals, vecs))
}

/// Eigenvalues only (still ascending).
pub fn sym_eigenvalues(a: &SymMat) -> Result<Vec<f64>> {
    sym_eigen(a).map(|(vals, _)| vals)
}

/// Householder reduction to tridiagonal form, accumulating the orthogonal
/// transformation in `z` (classic tred2).
fn tridiagonalize(z: &mut DMat, d: &mut [f64], e: &mut [f64]) {
    let n = z.nrows();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += z.get(i, k).abs();
            }
            if scale == 0.0 {
                e[i] = z.get(i, l);
            } else {
                for k in 0..=l {
                    let v = z.get(i, k) / scale;
                    z.set(i, k, v);
                    h += v * v;
                }
                let f = z.get(i, l);
                let g = if f >= 0.0 { -num::sqrt(h) } else { num::sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                z.set(i, l, f - g);
                let mut fsum = 0.0;
                for j in 0..=l {
                    z.set(j, i, z.get(i, j) / h);
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z.get(j, k) * z.get(i, k);
                    }
                    for k in j + 1..=l {
                        g += z.get(k, j) * z.get(i, k);
                    }
                    e[j] = g / h;
                    fsum += e[j] * z.get(i, j);
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = z.get(i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z.add_to(j, k, -(f * e[k] + g * z.get(i, k)));
                    }
                }
            }
        } else {
            e[i] = z.get(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z.get(i, k) * z.get(k, j);
                }
                for k in 0..i {
                    z.add_to(k, j, -g * z.get(k, i));
                }
            }
        }
        d[i] = z.get(i, i);
        z.set(i, i, 1.0);
        for j in 0..i {
            z.set(j, i, 0.0);
            z.set(i, j, 0.0);
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix with
/// eigenvector accumulation (classic tql2).
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut DMat) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 64 {
                return Err(Error::Estimation(alloc::format!(
                    "symmetric QL failed to converge at index {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = num::hypot(g, 1.0);
            let sgn = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sgn);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut broke = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = num::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    broke = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z.get(k, i + 1);
                    z.set(k, i + 1, s * z.get(k, i) + c * f);
                    z.set(k, i, c * z.get(k, i) - s * f);
                }
            }
            if broke {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
