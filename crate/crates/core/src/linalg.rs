//! Row-major dense matrices and the handful of kernels the engine needs.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major `rows x cols` matrix of `f64`.
///
/// The length invariant `data.len() == rows * cols` is enforced by every
/// constructor; fields are private so it cannot be broken from outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim("Matrix::from_vec", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::dim("Matrix::from_rows", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Single-row matrix.
    pub fn row_vector(v: &[f64]) -> Self {
        Matrix {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    /// Single-column matrix.
    pub fn column_vector(v: &[f64]) -> Self {
        Matrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
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

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows `idx` gathered into a new matrix, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            out.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data: out,
        }
    }

    /// Columns `[start, end)` as a new matrix.
    pub fn column_range(&self, start: usize, end: usize) -> Matrix {
        let w = end - start;
        let mut out = Vec::with_capacity(self.rows * w);
        for r in 0..self.rows {
            out.extend_from_slice(&self.row(r)[start..end]);
        }
        Matrix {
            rows: self.rows,
            cols: w,
            data: out,
        }
    }

    /// `[self | other]` side by side.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::dim("Matrix::hstack", self.rows, other.rows));
        }
        let cols = self.cols + other.cols;
        let mut out = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            out.extend_from_slice(self.row(r));
            out.extend_from_slice(other.row(r));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data: out,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Element-wise product. Shapes must agree.
    pub fn hadamard(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for v in &mut self.data {
            *v *= k;
        }
    }

    /// `self * other^T` where `other` is `(out x in)` and `self` is `(b x in)`.
    ///
    /// This is the dense-layer kernel: both operands are walked row-wise.
    pub fn matmul_transposed(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        let mut out = Matrix::zeros(self.rows, other.rows);
        for b in 0..self.rows {
            let x = self.row(b);
            let dst = out.row_mut(b);
            for (o, d) in dst.iter_mut().enumerate() {
                *d = dot(x, other.row(o));
            }
        }
        out
    }

    /// `self * other` with `self: (b x k)` and `other: (k x n)`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for b in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(b, k);
                if a == 0.0 {
                    continue;
                }
                axpy(a, other.row(k), out.row_mut(b));
            }
        }
        out
    }

    /// `self^T * other` with `self: (b x m)` and `other: (b x n)`, giving `m x n`.
    pub fn transpose_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Matrix::zeros(self.cols, other.cols);
        for b in 0..self.rows {
            let lhs = self.row(b);
            let rhs = other.row(b);
            for (m, &a) in lhs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                axpy(a, rhs, out.row_mut(m));
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    /// Column sums as a vector of length `cols`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v;
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators keep the loop vectorisable without changing the
    // result between runs.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Least-squares fit of every column of `y` on the columns of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// `x.cols() x y.cols()`
    pub coef: Matrix,
    /// Classical standard errors, same shape as `coef`.
    pub std_err: Matrix,
    /// Residual variance per response column (divisor `n - p`).
    pub residual_var: Vec<f64>,
}

/// Relative eigenvalue floor below which `X^T X` is treated as singular.
const RANK_TOL: f64 = 1e-12;

/// Ordinary least squares through the normal equations.
///
/// Rank deficiency, judged by the eigenvalue spread of `X^T X`, is an error
/// rather than a silently regularised answer.
pub fn ols(x: &Matrix, y: &Matrix) -> Result<OlsFit> {
    use nalgebra::{DMatrix, SymmetricEigen};

    let (n, p) = (x.rows(), x.cols());
    if y.rows() != n {
        return Err(Error::dim("ols response rows", n, y.rows()));
    }
    if n <= p {
        return Err(Error::Singular(format!("{n} rows for {p} coefficients")));
    }
    let xtx = x.transpose_matmul(x);
    let xty = x.transpose_matmul(y);
    let a = DMatrix::from_row_slice(p, p, xtx.as_slice());
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(0.0f64, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= RANK_TOL * max {
        return Err(Error::Singular(format!(
            "X^T X eigenvalues span [{min:e}, {max:e}]"
        )));
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Singular("X^T X is not positive definite".into()))?;
    let b = chol.solve(&DMatrix::from_row_slice(p, y.cols(), xty.as_slice()));
    let inv = chol.inverse();

    let mut coef = Matrix::zeros(p, y.cols());
    for r in 0..p {
        for c in 0..y.cols() {
            coef.set(r, c, b[(r, c)]);
        }
    }
    let fitted = x.matmul(&coef);
    let dof = (n - p) as f64;
    let residual_var: Vec<f64> = (0..y.cols())
        .map(|c| {
            (0..n)
                .map(|i| {
                    let e = y.get(i, c) - fitted.get(i, c);
                    e * e
                })
                .sum::<f64>()
                / dof
        })
        .collect();
    let mut std_err = Matrix::zeros(p, y.cols());
    for r in 0..p {
        for (c, s2) in residual_var.iter().enumerate() {
            std_err.set(r, c, (s2 * inv[(r, r)]).sqrt());
        }
    }
    Ok(OlsFit {
        coef,
        std_err,
        residual_var,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Matrix {
        Matrix::from_vec(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(Matrix::from_vec(2, 3, vec![0.0; 5]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn kernels_agree_with_naive_products() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = m(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let ab = a.matmul(&b);
        assert_eq!(ab.as_slice(), &[58.0, 64.0, 139.0, 154.0]);
        assert_eq!(a.matmul_transposed(&b.transpose()), ab);
        assert_eq!(a.transpose().transpose_matmul(&b), ab);
    }

    #[test]
    fn stacking_and_slicing() {
        let a = m(2, 1, &[1.0, 2.0]);
        let b = m(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let s = a.hstack(&b).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        assert_eq!(s.column_range(1, 3), b);
        assert_eq!(s.select_rows(&[1]).as_slice(), &[2.0, 5.0, 6.0]);
        assert_eq!(s.column_sums(), vec![3.0, 8.0, 10.0]);
    }

    #[test]
    fn ols_recovers_exact_linear_map() {
        // y = 1 + 2 a - 3 b, no noise
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let a = i as f64;
                let b = ((i * 7) % 5) as f64;
                vec![1.0, a, b]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + 2.0 * r[1] - 3.0 * r[2]).collect();
        let fit = ols(&x, &Matrix::column_vector(&y)).unwrap();
        for (c, t) in fit.coef.as_slice().iter().zip([1.0, 2.0, -3.0]) {
            assert!((c - t).abs() < 1e-10);
        }
        assert!(fit.residual_var[0] < 1e-20);
    }

    #[test]
    fn ols_flags_collinear_design() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let err = ols(&x, &Matrix::zeros(10, 1)).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
        assert!(ols(&Matrix::zeros(2, 3), &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (1..=7).map(f64::from).collect();
        assert_eq!(dot(&a, &a), 140.0);
    }
}
