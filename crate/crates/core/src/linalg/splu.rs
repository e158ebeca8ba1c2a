//! Left-looking sparse LU (Gilbert-Peierls) with threshold partial pivoting.
//!
//! Factorizes `P A Q = L U` where `Q` is a fill-reducing column ordering and
//! `P` comes from pivoting. `L` is unit lower triangular, stored by columns
//! with the unit diagonal first; `U` is stored by columns with its diagonal
//! last.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{LinearSolver, SparseMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ColumnOrdering {
    Natural,
    /// Reverse Cuthill-McKee on the pattern of `A + A^T`.
    #[default]
    ReverseCuthillMcKee,
}

#[derive(Clone, Debug)]
struct CscFactor<T> {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct SparseLu<T> {
    n: usize,
    l: CscFactor<T>,
    u: CscFactor<T>,
    /// `pinv[i] = k` means original row `i` is pivot row `k`.
    pinv: Vec<usize>,
    /// Column `k` of the factorization is original column `q[k]`.
    q: Vec<usize>,
}

impl<T: Real> SparseLu<T> {
    /// Threshold 0.1 on diagonal preference and reverse Cuthill-McKee ordering.
    pub fn factor(a: &SparseMatrix<T>) -> Result<Self> {
        Self::factor_with(a, ColumnOrdering::default(), T::lit(0.1))
    }

    /// `pivot_tol` in `(0, 1]`: the diagonal is kept as pivot when
    /// `|a_kk| >= pivot_tol * max_i |a_ik|`; 1 gives plain partial pivoting.
    pub fn factor_with(a: &SparseMatrix<T>, ordering: ColumnOrdering, pivot_tol: T) -> Result<Self> {
        let n = a.n_rows();
        if n != a.n_cols() {
            return Err(Error::Dimension("sparse LU needs a square matrix".into()));
        }
        let q = match ordering {
            ColumnOrdering::Natural => (0..n).collect(),
            ColumnOrdering::ReverseCuthillMcKee => reverse_cuthill_mckee(a),
        };
        // CSR of A^T is CSC of A.
        let at = a.transpose();
        let (acp, ari, ax) = (at.row_ptr(), at.col_idx(), at.values());

        const UNSET: usize = usize::MAX;
        let mut pinv = vec![UNSET; n];
        let guess = 4 * a.nnz() + n;
        let mut l = CscFactor {
            col_ptr: Vec::with_capacity(n + 1),
            row_idx: Vec::with_capacity(guess),
            vals: Vec::with_capacity(guess),
        };
        let mut u = CscFactor {
            col_ptr: Vec::with_capacity(n + 1),
            row_idx: Vec::with_capacity(guess),
            vals: Vec::with_capacity(guess),
        };
        let mut x = vec![T::zero(); n];
        let mut reach: Vec<usize> = Vec::with_capacity(n);
        let mut mark = vec![usize::MAX; n];
        let mut stack: Vec<(usize, usize)> = Vec::with_capacity(n);

        for k in 0..n {
            l.col_ptr.push(l.vals.len());
            u.col_ptr.push(u.vals.len());
            let col = q[k];
            let (lo, hi) = (acp[col], acp[col + 1]);

            // Nonzero pattern of L \ A(:, col) in topological order (reversed postorder).
            reach.clear();
            for &i in &ari[lo..hi] {
                if mark[i] == k {
                    continue;
                }
                mark[i] = k;
                stack.push((i, 0));
                while let Some(&mut (j, ref mut child)) = stack.last_mut() {
                    let jcol = pinv[j];
                    let mut descended = false;
                    if jcol != UNSET {
                        let (s, e) = (l.col_ptr[jcol] + 1, l.col_ptr[jcol + 1]);
                        while s + *child < e {
                            let r = l.row_idx[s + *child];
                            *child += 1;
                            if mark[r] != k {
                                mark[r] = k;
                                stack.push((r, 0));
                                descended = true;
                                break;
                            }
                        }
                    }
                    if !descended {
                        stack.pop();
                        reach.push(j);
                    }
                }
            }

            for (&i, &v) in ari[lo..hi].iter().zip(&ax[lo..hi]) {
                x[i] = v;
            }
            for &j in reach.iter().rev() {
                let jcol = pinv[j];
                if jcol == UNSET {
                    continue;
                }
                let xj = x[j];
                if xj == T::zero() {
                    continue;
                }
                for p in l.col_ptr[jcol] + 1..l.col_ptr[jcol + 1] {
                    x[l.row_idx[p]] -= l.vals[p] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut best = -T::one();
            for &i in reach.iter().rev() {
                if pinv[i] == UNSET {
                    let v = x[i].abs();
                    if v > best {
                        best = v;
                        ipiv = i;
                    }
                } else {
                    u.row_idx.push(pinv[i]);
                    u.vals.push(x[i]);
                }
            }
            if ipiv == UNSET || !(best > T::zero()) || !best.is_finite() {
                return Err(Error::Singular { step: k });
            }
            if pinv[col] == UNSET && mark[col] == k && x[col].abs() >= best * pivot_tol {
                ipiv = col;
            }
            let pivot = x[ipiv];
            u.row_idx.push(k);
            u.vals.push(pivot);
            pinv[ipiv] = k;
            l.row_idx.push(ipiv);
            l.vals.push(T::one());
            for &i in &reach {
                if pinv[i] == UNSET {
                    l.row_idx.push(i);
                    l.vals.push(x[i] / pivot);
                }
                x[i] = T::zero();
            }
        }
        l.col_ptr.push(l.vals.len());
        u.col_ptr.push(u.vals.len());
        for r in l.row_idx.iter_mut() {
            *r = pinv[*r];
        }
        Ok(Self { n, l, u, pinv, q })
    }

    /// Stored entries of `L` and `U` (unit diagonal of `L` included).
    pub fn factor_nnz(&self) -> usize {
        self.l.vals.len() + self.u.vals.len()
    }

    pub fn column_order(&self) -> &[usize] {
        &self.q
    }
}

impl<T: Real> LinearSolver<T> for SparseLu<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        let mut y = vec![T::zero(); n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for k in 0..n {
            let yk = y[k];
            if yk == T::zero() {
                continue;
            }
            for p in self.l.col_ptr[k] + 1..self.l.col_ptr[k + 1] {
                y[self.l.row_idx[p]] -= self.l.vals[p] * yk;
            }
        }
        for k in (0..n).rev() {
            let diag = self.u.col_ptr[k + 1] - 1;
            y[k] /= self.u.vals[diag];
            let yk = y[k];
            if yk == T::zero() {
                continue;
            }
            for p in self.u.col_ptr[k]..diag {
                y[self.u.row_idx[p]] -= self.u.vals[p] * yk;
            }
        }
        for (k, &qk) in self.q.iter().enumerate() {
            b[qk] = y[k];
        }
    }

    fn solve_transpose_in_place(&self, b: &mut [T]) {
        // A^T = Q U^T L^T P
        let n = self.n;
        let mut z: Vec<T> = self.q.iter().map(|&qk| b[qk]).collect();
        for k in 0..n {
            let diag = self.u.col_ptr[k + 1] - 1;
            let mut s = z[k];
            for p in self.u.col_ptr[k]..diag {
                s -= self.u.vals[p] * z[self.u.row_idx[p]];
            }
            z[k] = s / self.u.vals[diag];
        }
        for k in (0..n).rev() {
            let mut s = z[k];
            for p in self.l.col_ptr[k] + 1..self.l.col_ptr[k + 1] {
                s -= self.l.vals[p] * z[self.l.row_idx[p]];
            }
            z[k] = s;
        }
        for (i, bi) in b.iter_mut().enumerate() {
            *bi = z[self.pinv[i]];
        }
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrized pattern, one BFS per
/// connected component, each rooted at a pseudo-peripheral vertex.
pub(crate) fn reverse_cuthill_mckee<T: Real>(a: &SparseMatrix<T>) -> Vec<usize> {
    let n = a.n_rows();
    let at = a.transpose();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        adj[i].extend(a.row(i).map(|(j, _)| j).filter(|&j| j != i));
        adj[i].extend(at.row(i).map(|(j, _)| j).filter(|&j| j != i));
        adj[i].sort_unstable();
        adj[i].dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |root: usize, visited: &[bool]| -> (usize, usize) {
        // returns (eccentricity, a minimum-degree vertex on the last level)
        let mut level = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        level[root] = 0;
        queue.push_back(root);
        let mut last = root;
        while let Some(v) = queue.pop_front() {
            if level[v] > level[last] || (level[v] == level[last] && degree[v] < degree[last]) {
                last = v;
            }
            for &w in &adj[v] {
                if !visited[w] && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (level[last], last)
    };

    for start in 0..n {
        if visited[start] {
            continue;
        }
        // pseudo-peripheral root
        let mut root = start;
        let (mut ecc, mut far) = bfs_levels(root, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            root = far;
            ecc = e2;
            far = f2;
        }
        let comp_start = order.len();
        visited[root] = true;
        order.push(root);
        let mut head = comp_start;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseMatrix, Lu, Triplets};

    fn poisson_1d(n: usize) -> SparseMatrix<f64> {
        let mut t = Triplets::new();
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
            }
        }
        SparseMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identity_solve_is_noop() {
        let lu = SparseLu::factor(&SparseMatrix::<f64>::identity(5)).unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(lu.solve(&b), b);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let a = SparseMatrix::from_dense(
            &DenseMatrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]),
            0.0,
        );
        let x = SparseLu::factor(&a).unwrap().solve(&[5.0, 10.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let a = poisson_1d(10);
        let b: Vec<f64> = (0..10).map(|i| (i as f64).sin() + 1.0).collect();
        let xs = SparseLu::factor(&a).unwrap().solve(&b);
        let xd = Lu::factor(&a.to_dense()).unwrap().solve(&b);
        for (s, d) in xs.iter().zip(&xd) {
            assert!((s - d).abs() <= 1e-12 * d.abs().max(1.0));
        }
    }

    #[test]
    fn needs_pivoting() {
        // zero diagonal forces an off-diagonal pivot
        let d = DenseMatrix::<f64>::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0],
        ]);
        let a = SparseMatrix::from_dense(&d, 0.0);
        for ord in [ColumnOrdering::Natural, ColumnOrdering::ReverseCuthillMcKee] {
            let lu = SparseLu::factor_with(&a, ord, 1.0).unwrap();
            let b = [1.0, 2.0, 3.0];
            let x = lu.solve(&b);
            let r = a.matvec(&x);
            for (ri, bi) in r.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-14);
            }
            let xt = lu.solve_transpose(&b);
            let rt = a.transpose().matvec(&xt);
            for (ri, bi) in rt.iter().zip(&b) {
                assert!((ri - bi).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_reports_step() {
        let d = DenseMatrix::<f64>::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        let a = SparseMatrix::from_dense(&d, 0.0);
        assert!(matches!(SparseLu::factor(&a), Err(Error::Singular { .. })));
        let empty_col = SparseMatrix::from_dense(
            &DenseMatrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]),
            0.0,
        );
        assert!(SparseLu::factor(&empty_col).is_err());
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = poisson_1d(17);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }
}
