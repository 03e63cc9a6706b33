use std::sync::Arc;

use super::DenseMatrix;
use crate::scalar::Scalar;

/// Row-compressed sparsity structure with sorted column indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Union of dense blocks `ids × ids` plus the full diagonal.
    pub fn from_cliques<'a>(n: usize, cliques: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for ids in cliques {
            for &i in ids {
                rows[i].extend_from_slice(ids);
            }
        }
        Self::from_rows(n, rows)
    }

    fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        Self { n_rows: row_ptr.len() - 1, n_cols, row_ptr, col_idx }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn cols(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row(i)]
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    /// Storage position of entry `(i, j)`, if structurally present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row(i);
        self.col_idx[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }
}

/// Compressed sparse row matrix. Matrices built on the same mesh share one
/// [`SparsityPattern`], so linear combinations are plain value-array operations.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pattern: Arc<SparsityPattern>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let nnz = pattern.nnz();
        Self { pattern, values: vec![T::zero(); nnz] }
    }

    pub fn from_dense(a: &DenseMatrix<T>) -> Self {
        let rows = (0..a.nrows())
            .map(|i| (0..a.ncols()).filter(|&j| a[(i, j)] != T::zero() || i == j).collect())
            .collect();
        let pattern = Arc::new(SparsityPattern::from_rows(a.ncols(), rows));
        let mut m = Self::zeros(pattern);
        for i in 0..a.nrows() {
            for k in m.pattern.row(i) {
                m.values[k] = a[(i, m.pattern.col_idx[k])];
            }
        }
        m
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows(), self.n_cols());
        for i in 0..self.n_rows() {
            for k in self.pattern.row(i) {
                d[(i, self.pattern.col_idx[k])] = self.values[k];
            }
        }
        d
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.pattern.find(i, j).map_or(T::zero(), |k| self.values[k])
    }

    /// Scatter-adds `local` at global indices `ids × ids`.
    ///
    /// # Panics
    /// If an entry is not in the pattern.
    pub fn add_local(&mut self, ids: &[usize], local: &DenseMatrix<T>) {
        for (a, &i) in ids.iter().enumerate() {
            let r = self.pattern.row(i);
            let cols = &self.pattern.col_idx[r.clone()];
            for (b, &j) in ids.iter().enumerate() {
                let k = cols.binary_search(&j).expect("entry outside sparsity pattern");
                self.values[r.start + k] += local[(a, b)];
            }
        }
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols());
        assert_eq!(y.len(), self.n_rows());
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.pattern.row(i);
            *yi = self.pattern.col_idx[r.clone()].iter().zip(&self.values[r]).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n_rows()];
        self.matvec_into(x, &mut y);
        y
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        crate::scalar::dot(x, &self.matvec(y))
    }

    /// `a·self + b·other` for matrices sharing a pattern.
    pub fn combine(&self, a: T, other: &Self, b: T) -> Self {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern, "pattern mismatch");
        let values = self.values.iter().zip(&other.values).map(|(&x, &y)| a * x + b * y).collect();
        Self { pattern: Arc::clone(&self.pattern), values }
    }

    /// `self + c · other · diag(d)` for matrices sharing a pattern.
    pub fn add_scaled_columns(&self, c: T, other: &Self, d: &[T]) -> Self {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern, "pattern mismatch");
        let values = self
            .pattern
            .col_idx
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(&j, (&x, &y))| x + c * y * d[j])
            .collect();
        Self { pattern: Arc::clone(&self.pattern), values }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { pattern: Arc::clone(&self.pattern), values: self.values.iter().map(|&v| v * s).collect() }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n_rows()).map(|i| self.get(i, i)).collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n_rows() {
            for k in self.pattern.row(i) {
                let j = self.pattern.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Rows `rows` and the columns mapped by `col_map` (global → local, `None` drops the column).
    pub fn submatrix(&self, rows: &[usize], col_map: &[Option<usize>], n_cols: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &i in rows {
            // the column map is monotone on kept columns, so sorting is preserved
            for k in self.pattern.row(i) {
                if let Some(jj) = col_map[self.pattern.col_idx[k]] {
                    col_idx.push(jj);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let pattern = SparsityPattern { n_rows: rows.len(), n_cols, row_ptr, col_idx };
        Self { pattern: Arc::new(pattern), values }
    }
}
