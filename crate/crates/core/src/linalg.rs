//! Small dense linear algebra on row-major real and complex matrices, with a
//! cyclic Jacobi eigensolver for symmetric matrices and a Hermitian Cholesky
//! solve.
//!
//! Problem sizes here are a few hundred at most, so everything is plain loops.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
}

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `out = self · x`
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row
                .iter()
                .zip(x)
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = selfᵀ · y`
    pub fn tr_mul_vec_into(&self, y: &[T], out: &mut [T]) {
        assert_eq!(y.len(), self.rows);
        assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            if yi == T::zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(row) {
                *o = *o + a * yi;
            }
        }
    }

    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        self.tr_mul_vec_into(y, &mut out);
        out
    }

    /// `self · selfᵀ`
    pub fn gram_rows(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// `selfᵀ · self`
    pub fn gram_cols(&self) -> Self {
        self.transpose().gram_rows()
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the matrix whose columns are
    /// the matching orthonormal eigenvectors. Only the symmetric part of
    /// `self` is used.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Self) {
        assert_eq!(
            self.rows, self.cols,
            "symmetric_eigen needs a square matrix"
        );
        let n = self.rows;
        let half = T::of(0.5);
        let mut a = Self::from_fn(n, n, |i, j| half * (self[(i, j)] + self[(j, i)]));
        let mut v = Self::identity(n);
        let eps = T::epsilon();

        for _sweep in 0..100 {
            let mut off = T::zero();
            let mut diag = T::zero();
            for i in 0..n {
                diag = diag + a[(i, i)] * a[(i, i)];
                for j in (i + 1)..n {
                    off = off + a[(i, j)] * a[(i, j)];
                }
            }
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    let theta = (aqq - app) / (T::of(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let t = if theta == T::zero() { T::one() } else { t };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    a[(p, q)] = T::zero();
                    a[(q, p)] = T::zero();
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[(i, i)]
                .partial_cmp(&a[(j, j)])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let vectors = Self::from_fn(n, n, |r, c| v[(r, order[c])]);
        (values, vectors)
    }

    /// Largest eigenvalue of a symmetric matrix.
    pub fn largest_symmetric_eigenvalue(&self) -> T {
        let (values, _) = self.symmetric_eigen();
        values.last().copied().unwrap_or_else(T::zero)
    }

    /// Principal square root of a symmetric positive semidefinite matrix.
    ///
    /// Negative eigenvalues are clipped to zero; the most negative one is
    /// returned alongside so callers can report it.
    pub fn psd_sqrt(&self) -> (Self, T) {
        let (values, vectors) = self.symmetric_eigen();
        let n = self.rows;
        let most_negative = values.iter().fold(T::zero(), |m, &x| m.min(x));
        let roots: Vec<T> = values.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
        let out = Self::from_fn(n, n, |i, j| {
            (0..n).fold(T::zero(), |acc, k| {
                acc + vectors[(i, k)] * roots[k] * vectors[(j, k)]
            })
        });
        (out, most_negative)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(
        rows: usize,
        cols: usize,
        data: Vec<Complex<T>>,
    ) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| {
                        acc + a * b
                    })
            })
            .collect()
    }

    /// `selfᴴ · y`
    pub fn adjoint_mul_vec(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o = *o + a.conj() * yi;
            }
        }
        out
    }

    /// Copy keeping only the columns where `keep` is true, in order.
    pub fn select_columns(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.cols);
        let idx: Vec<usize> = (0..self.cols).filter(|&j| keep[j]).collect();
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// `self · selfᴴ`
    pub fn gram_rows(&self) -> Self {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self
                    .row(i)
                    .iter()
                    .zip(self.row(j))
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| {
                        acc + a * b.conj()
                    });
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        g
    }

    /// Real-valued lift `[[Re, −Im], [Im, Re]]`.
    pub fn lift(&self) -> Matrix<T> {
        let (r, c) = (self.rows, self.cols);
        Matrix::from_fn(2 * r, 2 * c, |i, j| {
            let z = self[(i % r, j % c)];
            match (i < r, j < c) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
    }

    /// Solves `self · z = b` for Hermitian positive definite `self` by Cholesky.
    pub fn cholesky_solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>, LinalgError> {
        let n = self.rows;
        if self.cols != n {
            return Err(LinalgError::Dimension {
                expected: n,
                got: self.cols,
            });
        }
        if b.len() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        let zero = Complex::new(T::zero(), T::zero());
        // lower-triangular factor, row-major
        let mut l = vec![zero; n * n];
        for j in 0..n {
            let mut d = self[(j, j)].re;
            for k in 0..j {
                d = d - l[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) {
                return Err(LinalgError::NotPositiveDefinite {
                    row: j,
                    pivot: d.as_f64(),
                });
            }
            let d = d.sqrt();
            l[j * n + j] = Complex::new(d, T::zero());
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        let mut y = vec![zero; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s = s - l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut z = vec![zero; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - l[k * n + i].conj() * z[k];
            }
            z[i] = s / l[i * n + i];
        }
        Ok(z)
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Stacks real parts over imaginary parts.
pub fn lift_vec<T: Real>(v: &[Complex<T>]) -> Vec<T> {
    v.iter()
        .map(|z| z.re)
        .chain(v.iter().map(|z| z.im))
        .collect()
}

/// Inverse of [`lift_vec`]; `v` must have even length.
pub fn unlift_vec<T: Real>(v: &[T]) -> Vec<Complex<T>> {
    assert!(v.len().is_multiple_of(2), "lifted vectors have even length");
    let n = v.len() / 2;
    (0..n).map(|i| Complex::new(v[i], v[n + i])).collect()
}
