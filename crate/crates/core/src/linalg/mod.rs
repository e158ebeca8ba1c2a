//! Numerical kernels: dense and compressed-row matrices, direct solvers,
//! condition estimation and nonsymmetric eigenvalues.

mod condest;
mod dense;
mod eigen;
pub mod mmio;
mod sparse;
mod splu;

pub use condest::{cond_estimate_1norm, inverse_norm1_estimate};
pub use dense::{inverse, solve_matrix, Cholesky, DenseFactorization, DenseMatrix, Lu};
pub use eigen::{dense_eigenvalues, hessenberg, MAX_EIGEN_DIM};
pub use sparse::{SparseMatrix, Triplets};
pub use splu::{ColumnOrdering, SparseLu};

use crate::scalar::Real;

/// A factorized square operator that can solve with itself and its transpose.
pub trait LinearSolver<T: Real> {
    fn dim(&self) -> usize;

    fn solve_in_place(&self, b: &mut [T]);

    fn solve_transpose_in_place(&self, b: &mut [T]);

    fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }
}
