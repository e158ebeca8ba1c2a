//! Per-patch kernel interpolation systems and their cardinal differentiation rows.

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{
    cond_estimate_1norm, Cholesky, DenseFactorization, DenseMatrix, LinearSolver, Lu,
};
use crate::scalar::{Point2, Real};

/// Differential operator applied to the local cardinal functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Id,
    Dx,
    Dy,
    Lap,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Id, Op::Dx, Op::Dy, Op::Lap];
}

/// Default cap on iterative refinement sweeps per right-hand side.
pub const DEFAULT_REFINE_STEPS: usize = 8;

/// Factorized kernel matrix of one patch.
#[derive(Clone, Debug)]
pub struct LocalSystem<T> {
    patch: usize,
    nodes: Vec<usize>,
    points: Vec<Point2<T>>,
    kernel: KernelSpec<T>,
    a: DenseMatrix<T>,
    factor: DenseFactorization<T>,
    cond: T,
    refine_steps: usize,
}

#[inline]
fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let z = s - a;
    (s, (a - (s - z)) + (b - z))
}

/// `b - A z` with every product and sum error carried along, so the result is
/// accurate to about twice the working precision.
fn residual<T: Real>(a: &DenseMatrix<T>, z: &[T], b: &[T]) -> Vec<T> {
    (0..a.rows())
        .map(|i| {
            let (mut s, mut c) = (b[i], T::zero());
            for (&aik, &zk) in a.row(i).iter().zip(z) {
                let p = aik * zk;
                let e = aik.mul_add(zk, -p);
                let (s1, t) = two_sum(s, -p);
                s = s1;
                c += t - e;
            }
            s + c
        })
        .collect()
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn kernel_matrix<T: Real>(kernel: &KernelSpec<T>, pts: &[Point2<T>]) -> DenseMatrix<T> {
    let n = pts.len();
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = kernel.eval(T::zero());
        for k in 0..i {
            let v = kernel.eval(dist(pts[i], pts[k]));
            a[(i, k)] = v;
            a[(k, i)] = v;
        }
    }
    a
}

#[inline]
fn dist<T: Real>(a: Point2<T>, b: Point2<T>) -> T {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    (dx * dx + dy * dy).sqrt()
}

impl<T: Real> LocalSystem<T> {
    /// Builds and factorizes the kernel matrix on `nodes` (global indices into `all_points`).
    ///
    /// Positive definite kernels try Cholesky first and fall back to pivoted LU.
    /// When Cholesky fails and the condition estimate also exceeds
    /// `1 / machine epsilon`, the patch is reported as numerically singular.
    pub fn build(
        kernel: &KernelSpec<T>,
        all_points: &[Point2<T>],
        nodes: &[usize],
        patch: usize,
    ) -> Result<Self> {
        Self::build_with(kernel, all_points, nodes, patch, DEFAULT_REFINE_STEPS)
    }

    /// As [`build`](Self::build) with an explicit cap on refinement sweeps
    /// (0 disables refinement).
    pub fn build_with(
        kernel: &KernelSpec<T>,
        all_points: &[Point2<T>],
        nodes: &[usize],
        patch: usize,
        refine_steps: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::NodeStarved {
                patch,
                count: 0,
                required: 1,
            });
        }
        let points: Vec<Point2<T>> = nodes.iter().map(|&i| all_points[i]).collect();
        let a = kernel_matrix(kernel, &points);
        let ill = |cond: T| Error::IllConditioned {
            patch,
            cond: cond.to_f64_lossy(),
        };

        let chol = if kernel.family().is_positive_definite() {
            Cholesky::factor(&a).ok()
        } else {
            None
        };
        let factor = match chol {
            Some(c) => DenseFactorization::Cholesky(c),
            None => {
                let lu = Lu::factor(&a).map_err(|_| ill(T::infinity()))?;
                DenseFactorization::PivotedLu(lu)
            }
        };
        let cond = cond_estimate_1norm(a.norm1(), &factor);
        if !cond.is_finite() {
            return Err(ill(cond));
        }
        if let DenseFactorization::PivotedLu(_) = factor {
            // A symmetric kernel matrix that is neither numerically positive
            // definite nor invertible to working precision carries no usable
            // information.
            if cond * T::epsilon() >= T::one() {
                return Err(ill(cond));
            }
            if kernel.family().is_positive_definite() {
                warn!("patch {patch}: Cholesky failed for {kernel}, using pivoted LU");
            }
        }
        Ok(Self {
            patch,
            nodes: nodes.to_vec(),
            points,
            kernel: *kernel,
            a,
            factor,
            cond,
            refine_steps,
        })
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    /// Global node indices of the patch.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// 1-norm condition estimate of the local kernel matrix.
    pub fn condition_estimate(&self) -> T {
        self.cond
    }

    pub fn factorization(&self) -> &DenseFactorization<T> {
        &self.factor
    }

    /// `(op phi)(|p - x_k|)` for each local node `x_k`.
    fn op_kernel_row(&self, op: Op, p: Point2<T>) -> Result<Vec<T>> {
        self.points
            .iter()
            .map(|&xk| {
                let r = dist(p, xk);
                Ok(match op {
                    Op::Id => self.kernel.eval(r),
                    Op::Dx => self.kernel.grad_factor(r)? * (p[0] - xk[0]),
                    Op::Dy => self.kernel.grad_factor(r)? * (p[1] - xk[1]),
                    Op::Lap => self.kernel.laplacian(r, 2)?,
                })
            })
            .collect()
    }

    /// Row `i` holds `op psi_k (p_i)` for every local cardinal function `psi_k`.
    pub fn operator_rows(&self, op: Op, eval_points: &[Point2<T>]) -> Result<DenseMatrix<T>> {
        let n = self.len();
        let mut out = DenseMatrix::zeros(eval_points.len(), n);
        for (i, &p) in eval_points.iter().enumerate() {
            // psi(p)^T = phi_op(p)^T A^{-1}, i.e. A psi = phi_op since A is symmetric
            let row = self.solve(&self.op_kernel_row(op, p)?);
            out.row_mut(i).copy_from_slice(&row);
        }
        Ok(out)
    }

    /// [`operator_rows`](Self::operator_rows) evaluated at the patch's own nodes.
    pub fn operator_rows_at_nodes(&self, op: Op) -> Result<DenseMatrix<T>> {
        self.operator_rows(op, &self.points)
    }

    /// Solves `A z = b`, then applies iterative refinement with
    /// extended-precision residuals. A correction is kept only while the
    /// corrections contract, so a system too ill-conditioned to converge
    /// falls back to the plain solve.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut z = self.factor.solve(b);
        if self.refine_steps == 0 {
            return z;
        }
        let correction = |z: &[T]| {
            let mut r = residual(&self.a, z, b);
            self.factor.solve_in_place(&mut r);
            r
        };
        let mut d = correction(&z);
        let mut d_norm = max_abs(&d);
        let half = T::lit(0.5);
        for _ in 0..self.refine_steps {
            if d_norm <= T::epsilon() * max_abs(&z) {
                break;
            }
            let trial: Vec<T> = z.iter().zip(&d).map(|(&x, &dx)| x + dx).collect();
            let next = correction(&trial);
            let next_norm = max_abs(&next);
            if !(next_norm <= half * d_norm) {
                break;
            }
            z = trial;
            d = next;
            d_norm = next_norm;
        }
        z
    }

    /// Local interpolant of nodal `values` evaluated at `p`.
    pub fn interpolate(&self, values: &[T], p: Point2<T>) -> Result<T> {
        if values.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} local nodes",
                values.len(),
                self.len()
            )));
        }
        let coeffs = self.solve(values);
        Ok(self
            .points
            .iter()
            .zip(&coeffs)
            .map(|(&xk, &c)| c * self.kernel.eval(dist(p, xk)))
            .fold(T::zero(), |s, x| s + x))
    }
}

/// Arithmetic used for the local kernel systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Precision {
    /// The scalar type of the discretization, with iterative refinement.
    #[default]
    Working,
    /// Double-double matrices and solves; results are rounded back to the
    /// working type. Reaches shape parameters whose local kernel matrices are
    /// numerically singular in `f64`.
    Extended,
}

impl Precision {
    pub fn tag(self) -> &'static str {
        match self {
            Precision::Working => "working",
            Precision::Extended => "extended",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "working" | "double" => Ok(Precision::Working),
            "extended" | "double-double" | "dd" => Ok(Precision::Extended),
            _ => Err(Error::InvalidConfig(format!("unknown precision '{s}'"))),
        }
    }
}

/// A local system held in either precision, reporting results in `T`.
#[derive(Clone, Debug)]
pub enum PatchSystem<T> {
    Working(LocalSystem<T>),
    Extended(LocalSystem<Dd>),
}

fn round_matrix<T: Real>(m: &DenseMatrix<Dd>) -> DenseMatrix<T> {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, k| T::lit(m[(i, k)].to_f64_lossy()))
}

impl<T: Real> PatchSystem<T> {
    pub fn build(
        kernel: &KernelSpec<T>,
        all_points: &[Point2<T>],
        nodes: &[usize],
        patch: usize,
        precision: Precision,
    ) -> Result<Self> {
        match precision {
            Precision::Working => {
                LocalSystem::build(kernel, all_points, nodes, patch).map(PatchSystem::Working)
            }
            Precision::Extended => {
                let pts: Vec<Point2<Dd>> = nodes
                    .iter()
                    .map(|&i| {
                        let p = all_points[i];
                        [Dd::lit(p[0].to_f64_lossy()), Dd::lit(p[1].to_f64_lossy())]
                    })
                    .collect();
                let local: Vec<usize> = (0..nodes.len()).collect();
                let mut ls = LocalSystem::build_with(&kernel.cast(), &pts, &local, patch, 0)?;
                ls.nodes = nodes.to_vec();
                Ok(PatchSystem::Extended(ls))
            }
        }
    }

    pub fn precision(&self) -> Precision {
        match self {
            PatchSystem::Working(_) => Precision::Working,
            PatchSystem::Extended(_) => Precision::Extended,
        }
    }

    pub fn nodes(&self) -> &[usize] {
        match self {
            PatchSystem::Working(l) => l.nodes(),
            PatchSystem::Extended(l) => l.nodes(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes().is_empty()
    }

    pub fn condition_estimate(&self) -> T {
        match self {
            PatchSystem::Working(l) => l.condition_estimate(),
            PatchSystem::Extended(l) => T::lit(l.condition_estimate().to_f64_lossy()),
        }
    }

    pub fn operator_rows_at_nodes(&self, op: Op) -> Result<DenseMatrix<T>> {
        match self {
            PatchSystem::Working(l) => l.operator_rows_at_nodes(op),
            PatchSystem::Extended(l) => Ok(round_matrix(&l.operator_rows_at_nodes(op)?)),
        }
    }
}

/// Monomials `x^a y^b` with `a + b < order`, graded by total degree.
pub fn monomial_exponents(order: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for deg in 0..order {
        for b in 0..=deg {
            out.push((deg - b, b));
        }
    }
    out
}

fn monomial<T: Real>(p: Point2<T>, (a, b): (usize, usize)) -> T {
    p[0].powi(a as i32) * p[1].powi(b as i32)
}

/// Kernel interpolant with polynomial tail, for conditionally positive definite kernels.
#[derive(Clone, Debug)]
pub struct AugmentedInterpolant<T> {
    kernel: KernelSpec<T>,
    centers: Vec<Point2<T>>,
    exponents: Vec<(usize, usize)>,
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Real> AugmentedInterpolant<T> {
    pub fn eval(&self, p: Point2<T>) -> T {
        let k: T = self
            .centers
            .iter()
            .zip(&self.alpha)
            .map(|(&c, &a)| a * self.kernel.eval(dist(p, c)))
            .fold(T::zero(), |s, x| s + x);
        let q: T = self
            .exponents
            .iter()
            .zip(&self.beta)
            .map(|(&e, &b)| b * monomial(p, e))
            .fold(T::zero(), |s, x| s + x);
        k + q
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.exponents
    }
}

/// Numerical rank of the columns of `p` by Gram-Schmidt with relative tolerance.
fn column_rank<T: Real>(p: &DenseMatrix<T>) -> usize {
    let (n, q) = (p.rows(), p.cols());
    let scale = p.max_abs().max(T::min_positive_value());
    let tol = T::lit(1e-10) * scale * T::from_usize_lossy(n.max(1)).sqrt();
    let mut basis: Vec<Vec<T>> = Vec::new();
    for j in 0..q {
        let mut v: Vec<T> = (0..n).map(|i| p[(i, j)]).collect();
        for _ in 0..2 {
            for b in &basis {
                let d: T = v.iter().zip(b).map(|(&x, &y)| x * y).fold(T::zero(), |s, x| s + x);
                for (x, &y) in v.iter_mut().zip(b) {
                    *x -= d * y;
                }
            }
        }
        let norm = v.iter().map(|&x| x * x).fold(T::zero(), |s, x| s + x).sqrt();
        if norm > tol {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis.len()
}

/// Solves `[A P; P^T 0] [alpha; beta] = [values; 0]` with polynomials of degree `< order`.
pub fn augmented_interpolate<T: Real>(
    kernel: &KernelSpec<T>,
    centers: &[Point2<T>],
    values: &[T],
    order: usize,
) -> Result<AugmentedInterpolant<T>> {
    if values.len() != centers.len() {
        return Err(Error::Dimension(format!(
            "{} values for {} centers",
            values.len(),
            centers.len()
        )));
    }
    if order < kernel.cpd_order() {
        return Err(Error::InvalidConfig(format!(
            "{kernel} needs polynomial order at least {}, got {order}",
            kernel.cpd_order()
        )));
    }
    let exponents = monomial_exponents(order);
    let (n, q) = (centers.len(), exponents.len());
    let p = DenseMatrix::from_fn(n, q, |i, j| monomial(centers[i], exponents[j]));
    if column_rank(&p) < q {
        return Err(Error::NotUnisolvent { order });
    }
    let a = kernel_matrix(kernel, centers);
    let big = DenseMatrix::from_fn(n + q, n + q, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => p[(i, j - n)],
        (false, true) => p[(j, i - n)],
        (false, false) => T::zero(),
    });
    let lu = Lu::factor(&big)?;
    let mut rhs = values.to_vec();
    rhs.resize(n + q, T::zero());
    lu.solve_in_place(&mut rhs);
    let beta = rhs.split_off(n);
    Ok(AugmentedInterpolant {
        kernel: *kernel,
        centers: centers.to_vec(),
        exponents,
        alpha: rhs,
        beta,
    })
}
