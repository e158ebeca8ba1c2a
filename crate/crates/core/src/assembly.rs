//! Global collocation operators glued from weighted local cardinal rows.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::covering::{Covering, Memberships, WeightEval};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{SparseMatrix, Triplets};
use crate::localinterp::{Op, PatchSystem, Precision};
use crate::points::NodeSet;
use crate::scalar::Real;

/// An assembled `N x N` operator together with the interior/boundary row split.
#[derive(Clone, Debug)]
pub struct GlobalOperator<T> {
    pub op: Op,
    pub matrix: SparseMatrix<T>,
    interior_mask: Vec<bool>,
}

impl<T: Real> GlobalOperator<T> {
    /// Rows of interior nodes kept, all others zeroed.
    pub fn interior(&self) -> SparseMatrix<T> {
        self.matrix.restrict_rows(&self.interior_mask)
    }

    /// Rows of boundary nodes kept, all others zeroed.
    pub fn boundary(&self) -> SparseMatrix<T> {
        let mask: Vec<bool> = self.interior_mask.iter().map(|b| !b).collect();
        self.matrix.restrict_rows(&mask)
    }

    pub fn interior_mask(&self) -> &[bool] {
        &self.interior_mask
    }
}

/// Keeps the listed rows of `a` and zeroes the rest.
pub fn restrict_rows<T: Real>(a: &SparseMatrix<T>, rows: &[usize]) -> SparseMatrix<T> {
    let mut keep = vec![false; a.n_rows()];
    for &i in rows {
        keep[i] = true;
    }
    a.restrict_rows(&keep)
}

/// Node set, covering and kernel with every local system factorized.
#[derive(Clone, Debug)]
pub struct Discretization<T> {
    nodes: NodeSet<T>,
    covering: Covering<T>,
    kernel: KernelSpec<T>,
    memberships: Memberships,
    locals: Vec<PatchSystem<T>>,
    weights: Vec<Vec<(usize, WeightEval<T>)>>,
}

impl<T: Real> Discretization<T> {
    /// Fails on node-starved patches, non positive definite kernels, or a
    /// numerically singular local system (the lowest failing patch is reported).
    pub fn new(kernel: KernelSpec<T>, nodes: NodeSet<T>, covering: Covering<T>) -> Result<Self> {
        Self::with_precision(kernel, nodes, covering, Precision::Working)
    }

    pub fn with_precision(
        kernel: KernelSpec<T>,
        nodes: NodeSet<T>,
        covering: Covering<T>,
        precision: Precision,
    ) -> Result<Self> {
        if !kernel.family().is_positive_definite() {
            return Err(Error::InvalidConfig(format!(
                "collocation needs a positive definite kernel, {} is not",
                kernel.family()
            )));
        }
        let memberships = covering.memberships(&nodes)?;
        let built: Vec<Result<PatchSystem<T>>> = memberships
            .patch_nodes
            .par_iter()
            .enumerate()
            .map(|(j, list)| PatchSystem::build(&kernel, nodes.points(), list, j, precision))
            .collect();
        let locals = built.into_iter().collect::<Result<Vec<_>>>()?;
        let weights = nodes
            .points()
            .par_iter()
            .map(|&p| covering.weights_at(p))
            .collect();
        Ok(Self {
            nodes,
            covering,
            kernel,
            memberships,
            locals,
            weights,
        })
    }

    pub fn nodes(&self) -> &NodeSet<T> {
        &self.nodes
    }

    pub fn covering(&self) -> &Covering<T> {
        &self.covering
    }

    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn memberships(&self) -> &Memberships {
        &self.memberships
    }

    pub fn local_systems(&self) -> &[PatchSystem<T>] {
        &self.locals
    }

    pub fn precision(&self) -> Precision {
        self.locals
            .first()
            .map(PatchSystem::precision)
            .unwrap_or_default()
    }

    /// Worst condition estimate over all local kernel matrices.
    pub fn max_local_condition(&self) -> T {
        self.locals
            .iter()
            .map(PatchSystem::condition_estimate)
            .fold(T::zero(), T::max)
    }

    fn weight(&self, node: usize, patch: usize) -> WeightEval<T> {
        self.weights[node]
            .iter()
            .find(|(j, _)| *j == patch)
            .map(|(_, w)| *w)
            .expect("membership and weight support agree")
    }

    fn patch_triplets(&self, j: usize, ops: &[Op]) -> Result<Vec<Triplets<T>>> {
        let ls = &self.locals[j];
        let needed: BTreeSet<Op> = ops
            .iter()
            .flat_map(|op| match op {
                Op::Id => vec![Op::Id],
                Op::Dx => vec![Op::Id, Op::Dx],
                Op::Dy => vec![Op::Id, Op::Dy],
                Op::Lap => vec![Op::Id, Op::Dx, Op::Dy, Op::Lap],
            })
            .collect();
        let rows = |op: Op| -> Result<_> {
            if needed.contains(&op) {
                ls.operator_rows_at_nodes(op).map(Some)
            } else {
                Ok(None)
            }
        };
        let (psi, dx, dy, lap) = (rows(Op::Id)?, rows(Op::Dx)?, rows(Op::Dy)?, rows(Op::Lap)?);
        let n = ls.len();
        let two = T::lit(2.0);
        let mut out: Vec<Triplets<T>> = ops.iter().map(|_| Triplets::with_capacity(n * n)).collect();
        for (li, &gi) in ls.nodes().iter().enumerate() {
            let w = self.weight(gi, j);
            for (lk, &gk) in ls.nodes().iter().enumerate() {
                let p = psi.as_ref().map(|m| m[(li, lk)]).unwrap_or_else(T::zero);
                for (t, op) in out.iter_mut().zip(ops) {
                    let v = match op {
                        Op::Id => w.w * p,
                        Op::Dx => w.grad_w[0] * p + w.w * dx.as_ref().unwrap()[(li, lk)],
                        Op::Dy => w.grad_w[1] * p + w.w * dy.as_ref().unwrap()[(li, lk)],
                        Op::Lap => {
                            let gx = dx.as_ref().unwrap()[(li, lk)];
                            let gy = dy.as_ref().unwrap()[(li, lk)];
                            w.lap_w * p
                                + two * (w.grad_w[0] * gx + w.grad_w[1] * gy)
                                + w.w * lap.as_ref().unwrap()[(li, lk)]
                        }
                    };
                    t.push(gi, gk, v);
                }
            }
        }
        Ok(out)
    }

    /// Assembles each requested operator; patches run in parallel and their
    /// contributions are merged in patch order, so results are deterministic.
    pub fn assemble_ops(&self, ops: &[Op]) -> Result<Vec<GlobalOperator<T>>> {
        let per_patch: Vec<Result<Vec<Triplets<T>>>> = (0..self.locals.len())
            .into_par_iter()
            .map(|j| self.patch_triplets(j, ops))
            .collect();
        let mut merged: Vec<Triplets<T>> = ops.iter().map(|_| Triplets::new()).collect();
        for r in per_patch {
            for (m, t) in merged.iter_mut().zip(r?) {
                m.extend(t);
            }
        }
        let n = self.nodes.len();
        let mask = self.nodes.interior_mask();
        Ok(ops
            .iter()
            .zip(merged)
            .map(|(&op, t)| GlobalOperator {
                op,
                matrix: SparseMatrix::from_triplets(n, n, &t),
                interior_mask: mask.clone(),
            })
            .collect())
    }

    pub fn assemble(&self, op: Op) -> Result<GlobalOperator<T>> {
        Ok(self.assemble_ops(&[op])?.remove(0))
    }
}

/// One-shot assembly of a single operator.
pub fn assemble<T: Real>(
    op: Op,
    kernel: KernelSpec<T>,
    nodes: NodeSet<T>,
    covering: Covering<T>,
) -> Result<GlobalOperator<T>> {
    Discretization::new(kernel, nodes, covering)?.assemble(op)
}

/// Pattern statistics of a sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityReport {
    pub n: usize,
    pub nnz: usize,
    pub density: f64,
    /// Largest `|i - j|` over stored entries.
    pub bandwidth: usize,
    pub max_row_nnz: usize,
    pub mean_row_nnz: f64,
}

pub fn sparsity_report<T: Real>(a: &SparseMatrix<T>) -> SparsityReport {
    let n = a.n_rows();
    let mut bandwidth = 0;
    let mut max_row = 0;
    for i in 0..n {
        max_row = max_row.max(a.row_nnz(i));
        for (j, _) in a.row(i) {
            bandwidth = bandwidth.max(i.abs_diff(j));
        }
    }
    let cells = (a.n_rows() * a.n_cols()).max(1) as f64;
    SparsityReport {
        n,
        nnz: a.nnz(),
        density: a.nnz() as f64 / cells,
        bandwidth,
        max_row_nnz: max_row,
        mean_row_nnz: if n == 0 { 0.0 } else { a.nnz() as f64 / n as f64 },
    }
}
