use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

/// Small row-major dense matrix for element-level operators.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
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

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// `selfᵀ · mid · self`
    pub fn congruence(&self, mid: &Self) -> Self {
        self.transpose().matmul(&mid.matmul(self))
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum()).collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-T::one()))
    }

    /// `(A + Aᵀ) / 2`, exactly symmetric in floating point.
    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting; `None` when a
    /// pivot falls below `pivot_tol` times the largest entry.
    pub fn inverse(&self, pivot_tol: T) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let scale = self.max_abs();
        if scale == T::zero() || !scale.is_finite() {
            return None;
        }
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap())?;
            if a[(piv, col)].abs() <= pivot_tol * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let d = T::one() / a[(col, col)];
            for j in 0..n {
                a[(col, j)] *= d;
                inv[(col, j)] *= d;
            }
            for i in 0..n {
                if i != col {
                    let f = a[(i, col)];
                    if f != T::zero() {
                        for j in 0..n {
                            let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                            a[(i, j)] -= f * ac;
                            inv[(i, j)] -= f * ic;
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_3x3() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| [[4.0, 1.0, 2.0], [0.0, 3.0, 1.0], [1.0, 0.0, 2.0]][i][j]);
        let inv = a.inverse(1e-12).unwrap();
        let id = a.matmul(&inv);
        assert!(id.sub(&DenseMatrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn singular_is_detected() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| (i + j) as f64);
        assert!(a.inverse(1e-12).is_none());
    }
}
