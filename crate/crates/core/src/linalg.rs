//! Dense linear algebra used by the estimator.
//!
//! Everything here works on row-major `f64` storage and is deliberately small:
//! a matrix type, a symmetric eigensolver (Householder tridiagonalization
//! followed by implicit QL, after the EISPACK `tred2`/`tql2` pair), a Cholesky
//! solve, and a power iteration for the top eigenvalue of an implicit
//! operator.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Returns a new matrix with the rows listed in `order`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.cols);
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: order.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                what: "matmul inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    axpy(a, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `Xᵀ v` for a row-major `X`.
    pub fn tr_mat_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.row_iter().zip(v) {
            if vi != 0.0 {
                axpy(vi, r, &mut out);
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Frobenius inner product `⟨A, B⟩ = Σ A_ij B_ij`.
    pub fn frobenius_dot(&self, other: &Matrix) -> f64 {
        dot(&self.data, &other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(dot(&self.data, &self.data))
    }

    /// Entrywise ℓ1 norm `Σ |A_ij|`.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|a| a.abs()).sum()
    }

    /// Entrywise max norm `max |A_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= tol
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.row_iter().zip(x).map(|(r, &xi)| xi * dot(r, x)).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators so the loop vectorizes without reassociation flags.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Pairwise (tree) summation; the reduction order depends only on the length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Weighted Gram matrix `Σ_i w_i x_i x_iᵀ` of the rows of `x`.
///
/// Rows with zero weight are skipped. Only the upper triangle is accumulated
/// and then mirrored, so the result is exactly symmetric.
pub fn weighted_gram(x: &Matrix, weights: &[f64]) -> Matrix {
    debug_assert_eq!(x.rows(), weights.len());
    let d = x.cols();
    let mut g = Matrix::zeros(d, d);
    for (row, &w) in x.row_iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for j in 0..d {
            let a = w * row[j];
            if a == 0.0 {
                continue;
            }
            let target = &mut g.data[j * d + j..(j + 1) * d];
            axpy(a, &row[j..], target);
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            g.data[j * d + i] = g.data[i * d + j];
        }
    }
    g
}

/// Eigendecomposition `A = Σ_k λ_k v_k v_kᵀ` of a real symmetric matrix.
///
/// Eigenvalues are sorted ascending; `vectors.row(k)` is the unit eigenvector
/// for `values[k]` when vectors were requested.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Option<Matrix>,
}

impl SymmetricEigen {
    pub fn new(a: &Matrix) -> Result<Self> {
        Self::compute(a, true)
    }

    pub fn values_only(a: &Matrix) -> Result<Vec<f64>> {
        Ok(Self::compute(a, false)?.values)
    }

    fn compute(a: &Matrix, want_vectors: bool) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if !a.all_finite() {
            return Err(Error::NonFinite {
                what: "eigensolver input",
            });
        }
        let n = a.rows();
        if n == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: want_vectors.then(|| Matrix::zeros(0, 0)),
            });
        }
        let mut v = a.clone();
        v.symmetrize();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tred2(&mut v, &mut d, &mut e, want_vectors);
        // tql2 rotates pairs of eigenvector columns; keep them as rows instead.
        let mut vt = if want_vectors {
            v.transpose()
        } else {
            Matrix::zeros(0, 0)
        };
        tql2(&mut vt, &mut d, &mut e, want_vectors).map_err(|iters| Error::EigenFailure {
            dimension: n,
            iterations: iters,
            frobenius: a.frobenius_norm(),
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
        let values = order.iter().map(|&i| d[i]).collect();
        let vectors = want_vectors.then(|| vt.select_rows(&order));
        Ok(Self { values, vectors })
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Largest eigenvalue of a symmetric matrix.
pub fn lambda_max(a: &Matrix) -> Result<f64> {
    Ok(SymmetricEigen::values_only(a)?.last().copied().unwrap_or(0.0))
}

// Householder reduction to tridiagonal form. On exit `d` holds the diagonal,
// `e[1..]` the subdiagonal and `v` the accumulated orthogonal transform (when
// requested).
fn tred2(v: &mut Matrix, d: &mut [f64], e: &mut [f64], want_vectors: bool) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    let vkj = v[(k, j)];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if want_vectors {
        for i in 0..n - 1 {
            v[(n - 1, i)] = v[(i, i)];
            v[(i, i)] = 1.0;
            let h = d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    d[k] = v[(k, i + 1)] / h;
                }
                for j in 0..=i {
                    let mut g = 0.0;
                    for k in 0..=i {
                        g += v[(k, i + 1)] * v[(k, j)];
                    }
                    for k in 0..=i {
                        v[(k, j)] -= g * d[k];
                    }
                }
            }
            for k in 0..=i {
                v[(k, i + 1)] = 0.0;
            }
        }
        for j in 0..n {
            d[j] = v[(n - 1, j)];
            v[(n - 1, j)] = 0.0;
        }
        v[(n - 1, n - 1)] = 1.0;
    } else {
        // The reduced diagonal is left in place on the diagonal of `v`.
        for j in 0..n {
            d[j] = v[(j, j)];
        }
    }
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal matrix; `vt` holds eigenvectors as rows.
// Returns the iteration count on failure.
fn tql2(vt: &mut Matrix, d: &mut [f64], e: &mut [f64], want_vectors: bool) -> core::result::Result<(), usize> {
    const MAX_SWEEPS: usize = 60;
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
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
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(sweeps);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
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
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        rotate_rows(vt, i, s, c);
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

#[inline]
fn rotate_rows(vt: &mut Matrix, i: usize, s: f64, c: f64) {
    let n = vt.cols();
    let (head, tail) = vt.as_mut_slice().split_at_mut((i + 1) * n);
    let ri = &mut head[i * n..];
    let ri1 = &mut tail[..n];
    for (a, b) in ri.iter_mut().zip(ri1.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky.
pub fn cholesky_solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if !a.is_square() || b.len() != n {
        return Err(Error::DimensionMismatch {
            what: "cholesky system",
            expected: n,
            found: b.len(),
        });
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = libm::sqrt(diag);
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    Ok(x)
}

/// Power iteration for the top eigenvalue of a symmetric PSD operator.
///
/// The starting vector is deterministic (all ones, perturbed by index) so
/// repeated calls agree bit for bit.
pub fn power_iteration(dim: usize, mut apply: impl FnMut(&[f64], &mut [f64]), max_iters: usize, rel_tol: f64) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + (i as f64) * 1e-3).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; dim];
    let mut estimate = 0.0;
    for _ in 0..max_iters {
        w.iter_mut().for_each(|x| *x = 0.0);
        apply(&v, &mut w);
        let rayleigh = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / nw);
        let done = (rayleigh - estimate).abs() <= rel_tol * rayleigh.abs();
        estimate = rayleigh;
        if done {
            break;
        }
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reconstruct(eig: &SymmetricEigen) -> Matrix {
        let v = eig.vectors.as_ref().unwrap();
        let n = eig.values.len();
        Matrix::from_fn(n, n, |i, j| (0..n).map(|k| eig.values[k] * v[(k, i)] * v[(k, j)]).sum())
    }

    #[test]
    fn eigen_diagonal() {
        let a = Matrix::from_diag(&[3.0, -1.0, 2.0]);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert_abs_diff_eq!(eig.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[2], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn eigen_two_by_two_closed_form() {
        let (a, b, c) = (2.0, 0.7, -1.3);
        let m = Matrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
        let eig = SymmetricEigen::new(&m).unwrap();
        let mean = 0.5 * (a + c);
        let rad = libm::sqrt(0.25 * (a - c) * (a - c) + b * b);
        assert_abs_diff_eq!(eig.values[0], mean - rad, epsilon = 1e-13);
        assert_abs_diff_eq!(eig.values[1], mean + rad, epsilon = 1e-13);
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let n = 17;
        let mut state = 12345u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut a = Matrix::from_fn(n, n, |_, _| next());
        a.symmetrize();
        let eig = SymmetricEigen::new(&a).unwrap();
        let back = reconstruct(&eig);
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(back[(i, j)], a[(i, j)], epsilon = 1e-12);
            }
        }
        let v = eig.vectors.as_ref().unwrap();
        for k in 0..n {
            for l in 0..n {
                let want = if k == l { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot(v.row(k), v.row(l)), want, epsilon = 1e-12);
            }
        }
        let vals = SymmetricEigen::values_only(&a).unwrap();
        for (x, y) in vals.iter().zip(&eig.values) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigen_rejects_non_square() {
        assert!(SymmetricEigen::new(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn cholesky_matches_known_solution() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = cholesky_solve(&a, &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0 / 11.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 7.0 / 11.0, epsilon = 1e-14);
        assert!(cholesky_solve(&Matrix::from_diag(&[1.0, -1.0]), &[0.0, 0.0]).is_err());
    }

    #[test]
    fn weighted_gram_matches_naive() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![-1.0, 0.5, 3.0]]).unwrap();
        let w = [0.25, 0.75];
        let g = weighted_gram(&x, &w);
        for i in 0..3 {
            for j in 0..3 {
                let want = w[0] * x[(0, i)] * x[(0, j)] + w[1] * x[(1, i)] * x[(1, j)];
                assert_abs_diff_eq!(g[(i, j)], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let top = power_iteration(2, |v, out| out.copy_from_slice(&a.mat_vec(v)), 500, 1e-14);
        assert_abs_diff_eq!(top, 3.0, epsilon = 1e-10);
    }

    #[test]
    fn pairwise_sum_small_and_large() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
