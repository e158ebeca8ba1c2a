use crate::error::{Error, Result};
use crate::scalar::Real;

use super::DenseMatrix;

/// Coordinate-format accumulator. Duplicate entries are summed on compression.
#[derive(Clone, Debug, Default)]
pub struct Triplets<T> {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Real> Triplets<T> {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(cap: usize) -> Self {
        Self {
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        self.rows.push(i);
        self.cols.push(j);
        self.vals.push(v);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn extend(&mut self, other: Triplets<T>) {
        self.rows.extend(other.rows);
        self.cols.extend(other.cols);
        self.vals.extend(other.vals);
    }
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![T::one(); n],
        }
    }

    /// Validates and wraps raw CSR arrays.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<T>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return Err(Error::Dimension("row pointer length".into()));
        }
        if col_idx.len() != vals.len() || *row_ptr.last().unwrap() != vals.len() {
            return Err(Error::Dimension("nnz mismatch".into()));
        }
        for i in 0..n_rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Dimension(format!("row pointer not monotone at {i}")));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::Dimension(format!("bad column indices in row {i}")));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Compresses triplets, summing duplicates. Summation order for a given
    /// `(i, j)` follows insertion order.
    pub fn from_triplets(n_rows: usize, n_cols: usize, t: &Triplets<T>) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &r in &t.rows {
            assert!(r < n_rows, "row index out of range");
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        // bucket by row, stable
        let mut next = counts.clone();
        let mut order = vec![0usize; t.len()];
        for (k, &r) in t.rows.iter().enumerate() {
            order[next[r]] = k;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(t.len());
        let mut vals = Vec::with_capacity(t.len());
        row_ptr.push(0);
        let mut scratch: Vec<usize> = Vec::new();
        for i in 0..n_rows {
            scratch.clear();
            scratch.extend_from_slice(&order[counts[i]..counts[i + 1]]);
            scratch.sort_by_key(|&k| t.cols[k]);
            let mut last: Option<usize> = None;
            for &k in &scratch {
                let c = t.cols[k];
                assert!(c < n_cols, "column index out of range");
                if last == Some(c) {
                    *vals.last_mut().unwrap() += t.vals[k];
                } else {
                    col_idx.push(c);
                    vals.push(t.vals[k]);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Keeps entries with `|a_ij| > drop_tol`.
    pub fn from_dense(a: &DenseMatrix<T>, drop_tol: T) -> Self {
        let mut t = Triplets::new();
        for i in 0..a.rows() {
            for (j, &v) in a.row(i).iter().enumerate() {
                if v.abs() > drop_tol {
                    t.push(i, j, v);
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &t)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.vals
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => T::zero(),
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.col_idx[p]];
            }
            *yi = s;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Triplets::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                t.push(j, i, v);
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, &t)
    }

    /// Linear combination `sum_k c_k M_k` over the union of sparsity patterns.
    pub fn linear_combination(terms: &[(T, &SparseMatrix<T>)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::Dimension("empty linear combination".into()));
        };
        let (n, m) = (first.n_rows, first.n_cols);
        if terms.iter().any(|(_, a)| a.n_rows != n || a.n_cols != m) {
            return Err(Error::Dimension("operand shapes differ".into()));
        }
        let mut t = Triplets::with_capacity(terms.iter().map(|(_, a)| a.nnz()).sum());
        for i in 0..n {
            for (c, a) in terms {
                for (j, v) in a.row(i) {
                    t.push(i, j, *c * v);
                }
            }
        }
        Ok(Self::from_triplets(n, m, &t))
    }

    /// Same shape; rows not flagged in `keep` become empty.
    pub fn restrict_rows(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.n_rows);
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..self.n_rows {
            if keep[i] {
                let r = self.row_ptr[i]..self.row_ptr[i + 1];
                col_idx.extend_from_slice(&self.col_idx[r.clone()]);
                vals.extend_from_slice(&self.vals[r]);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let mut sums = vec![T::zero(); self.n_cols];
        for (&j, &v) in self.col_idx.iter().zip(&self.vals) {
            sums[j] += v.abs();
        }
        sums.into_iter().fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.vals.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Applies the symmetric permutation `B = A(p, p)`: `B[i][j] = A[p[i]][p[j]]`.
    pub fn permute_symmetric(&self, p: &[usize]) -> Self {
        assert!(self.n_rows == self.n_cols && p.len() == self.n_rows);
        let mut pinv = vec![0; p.len()];
        for (i, &pi) in p.iter().enumerate() {
            pinv[pi] = i;
        }
        let mut t = Triplets::with_capacity(self.nnz());
        for (new_i, &old_i) in p.iter().enumerate() {
            for (j, v) in self.row(old_i) {
                t.push(new_i, pinv[j], v);
            }
        }
        Self::from_triplets(self.n_rows, self.n_cols, &t)
    }
}
