//! Dense row-major matrix storage and the handful of BLAS-like operations the
//! kernels are built from.
//!
//! Entry `(i, j)` of an `m`-by-`n` matrix lives at `data[i * n + j]`. Dimension
//! agreement is a caller contract and is enforced with assertions; fallible
//! numerical conditions (singularity, non-convergence) are reported as
//! [`crate::Error`] by the routines that detect them.

use crate::scalar::Scalar;
use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = T::one();
        }
        out
    }

    /// Build from a row-major entry slice.
    pub fn from_rows(rows: usize, cols: usize, entries: &[T]) -> Self {
        assert_eq!(entries.len(), rows * cols, "from_rows: entry count");
        Self {
            rows,
            cols,
            data: entries.to_vec(),
        }
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "from_vec: entry count");
        Self { rows, cols, data }
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

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Contiguous view of row `i`.
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of column `j`.
    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[T]) {
        assert_eq!(v.len(), self.rows, "set_col: length");
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let n = self.cols;
        let (lo, hi) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(hi * n);
        head[lo * n..lo * n + n].swap_with_slice(&mut tail[..n]);
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} by {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &aik) in arow.iter().enumerate() {
                let brow = &other.data[k * n..(k + 1) * n];
                for j in 0..n {
                    orow[j] += aik * brow[j];
                }
            }
        }
        out
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn t_mul(&self, other: &Self) -> Self {
        assert_eq!(
            self.rows, other.rows,
            "t_mul: {}x{} by {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.cols, other.cols);
        let n = other.cols;
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for (i, &aki) in arow.iter().enumerate() {
                let orow = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += aki * brow[j];
                }
            }
        }
        out
    }

    /// `self * otherᵀ` without materializing the transpose.
    pub fn mul_t(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.cols,
            "mul_t: {}x{} by {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        Self::from_fn(self.rows, other.rows, |i, j| {
            self.row(i)
                .iter()
                .zip(other.row(j))
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape");
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(&other.data) {
            *o += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape");
        let mut out = self.clone();
        for (o, &b) in out.data.iter_mut().zip(&other.data) {
            *o -= b;
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for x in &mut out.data {
            *x *= s;
        }
        out
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: T, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy: shape");
        for (o, &b) in self.data.iter_mut().zip(&other.data) {
            *o += s * b;
        }
    }

    /// Copy of the half-open block `rows r0..r1`, `cols c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        assert!(r0 <= r1 && r1 <= self.rows && c0 <= c1 && c1 <= self.cols, "block: range");
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    /// Overwrite the block whose top-left corner is `(r0, c0)` with `m`.
    pub fn set_block(&mut self, r0: usize, c0: usize, m: &Self) {
        assert!(r0 + m.rows <= self.rows && c0 + m.cols <= self.cols, "set_block: range");
        for i in 0..m.rows {
            for j in 0..m.cols {
                self[(r0 + i, c0 + j)] = m[(i, j)];
            }
        }
    }

    /// The leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> Self {
        self.block(0, self.rows, 0, k)
    }

    /// Concatenate matrices with equal row counts side by side.
    pub fn hstack(parts: &[&Self]) -> Self {
        assert!(!parts.is_empty(), "hstack: no parts");
        let rows = parts[0].rows;
        assert!(parts.iter().all(|p| p.rows == rows), "hstack: row counts");
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut at = 0;
        for p in parts {
            out.set_block(0, at, p);
            at += p.cols;
        }
        out
    }

    /// Square matrix with `parts` on the diagonal and zeros elsewhere.
    pub fn block_diag(parts: &[&Self]) -> Self {
        let rows = parts.iter().map(|p| p.rows).sum();
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r, mut c) = (0, 0);
        for p in parts {
            out.set_block(r, c, p);
            r += p.rows;
            c += p.cols;
        }
        out
    }

    pub fn fro_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    /// Largest entrywise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "max_abs_diff: shape");
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T: Scalar> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, e: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows, cols, e)
    }

    #[test]
    fn matmul_known_product() {
        let a = m(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let b = m(3, 2, &[7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transposed_products_match_explicit_transpose() {
        let a = m(3, 2, &[1.0, -2.0, 0.5, 3.0, -1.0, 4.0]);
        let b = m(3, 4, &(0..12).map(|i| i as f64 * 0.3 - 1.0).collect::<Vec<_>>());
        assert_eq!(a.t_mul(&b).data(), a.transpose().matmul(&b).data());
        let c = m(5, 2, &(0..10).map(|i| (i as f64).sin()).collect::<Vec<_>>());
        assert_eq!(a.mul_t(&c).data(), a.matmul(&c.transpose()).data());
    }

    #[test]
    fn identity_is_neutral() {
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let i = DenseMatrix::<f64>::identity(2);
        assert_eq!(a.matmul(&i).data(), a.data());
        assert_eq!(i.matmul(&a).data(), a.data());
    }

    #[test]
    fn block_roundtrip_and_hstack() {
        let a = DenseMatrix::<f64>::from_fn(4, 5, |i, j| (i * 5 + j) as f64);
        let b = a.block(1, 3, 2, 5);
        assert_eq!(b.rows(), 2);
        assert_eq!(b.cols(), 3);
        assert_eq!(b[(0, 0)], a[(1, 2)]);
        let h = DenseMatrix::hstack(&[&a.leading_cols(2), &a.block(0, 4, 2, 5)]);
        assert_eq!(h.max_abs_diff(&a), 0.0);
    }

    #[test]
    fn block_diag_places_blocks() {
        let a = m(1, 2, &[1.0, 2.0]);
        let b = m(2, 1, &[3.0, 4.0]);
        let d = DenseMatrix::block_diag(&[&a, &b]);
        assert_eq!(d.rows(), 3);
        assert_eq!(d.cols(), 3);
        assert_eq!(d[(0, 0)], 1.0);
        assert_eq!(d[(0, 1)], 2.0);
        assert_eq!(d[(1, 2)], 3.0);
        assert_eq!(d[(2, 2)], 4.0);
        assert_eq!(d[(1, 0)], 0.0);
    }

    #[test]
    fn fro_norm_hand_value() {
        let a = m(2, 2, &[3.0, 0.0, 4.0, 0.0]);
        assert_eq!(a.fro_norm(), 5.0);
    }

    #[test]
    fn swap_rows_swaps() {
        let mut a = DenseMatrix::<f64>::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        a.swap_rows(0, 2);
        assert_eq!(a.row(0), &[4.0, 5.0]);
        assert_eq!(a.row(2), &[0.0, 1.0]);
        a.swap_rows(1, 1);
        assert_eq!(a.row(1), &[2.0, 3.0]);
    }
}
