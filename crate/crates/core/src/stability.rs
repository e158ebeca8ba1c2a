//! Eigenvalue-based stability analysis of the theta scheme.

use std::io::Write;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{dense_eigenvalues, solve_matrix, Lu, SparseMatrix, MAX_EIGEN_DIM};
use crate::pde::{Operators, Problem, ThetaSystem};
use crate::scalar::Real;

/// Eigenvalues of `A^{-1} L_I`, i.e. of the generalized problem `L_I s = lambda A s`.
pub fn compute_m_eigs<T: Real>(
    l_i: &SparseMatrix<T>,
    a: &SparseMatrix<T>,
) -> Result<Vec<Complex<T>>> {
    let n = a.n_rows();
    if n > MAX_EIGEN_DIM {
        return Err(Error::SizeGuard {
            n,
            limit: MAX_EIGEN_DIM,
        });
    }
    if l_i.n_rows() != n || l_i.n_cols() != n || a.n_cols() != n {
        return Err(Error::Dimension("operator shapes differ".into()));
    }
    let lu = Lu::factor(&a.to_dense())?;
    let x = solve_matrix(&lu, &l_i.to_dense());
    dense_eigenvalues(&x)
}

fn ratio<T: Real>(num: Complex<T>, den: Complex<T>) -> Result<T> {
    let d = den.norm();
    if d == T::zero() {
        return Err(Error::SingularAmplification);
    }
    Ok(num.norm() / d)
}

/// `|1 + (1-theta) dt lambda| / |1 - theta dt lambda|`.
pub fn amplification_convdiff<T: Real>(lam: Complex<T>, theta: T, dt: T) -> Result<T> {
    let one = Complex::new(T::one(), T::zero());
    ratio(
        one + lam * ((T::one() - theta) * dt),
        one - lam * (theta * dt),
    )
}

/// `|1 + ((1-theta) dt alpha - beta) lambda| / |1 - (theta dt alpha + beta) lambda|`.
pub fn amplification_pseudo<T: Real>(
    lam: Complex<T>,
    theta: T,
    dt: T,
    alpha: T,
    beta: T,
) -> Result<T> {
    let one = Complex::new(T::one(), T::zero());
    ratio(
        one + lam * ((T::one() - theta) * dt * alpha - beta),
        one - lam * (theta * dt * alpha + beta),
    )
}

/// Outcome of the explicit-step bound `dt <= -2 / min Re lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExplicitBound<T> {
    Bound(T),
    /// Some eigenvalue has a real part above the tolerance; no step is stable.
    Unstable { max_re: T },
    /// Every eigenvalue is zero, so any step is allowed.
    Unbounded,
}

impl<T: Real> ExplicitBound<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            ExplicitBound::Bound(b) => Some(*b),
            _ => None,
        }
    }
}

pub fn explicit_dt_bound<T: Real>(eigs: &[Complex<T>], tol: T) -> ExplicitBound<T> {
    let max_re = eigs.iter().fold(T::neg_infinity(), |m, l| m.max(l.re));
    if max_re > tol {
        return ExplicitBound::Unstable { max_re };
    }
    let min_re = eigs.iter().fold(T::infinity(), |m, l| m.min(l.re));
    if eigs.is_empty() || min_re >= T::zero() {
        return ExplicitBound::Unbounded;
    }
    ExplicitBound::Bound(-T::lit(2.0) / min_re)
}

/// Largest `dt` with `|1 + dt lambda| <= 1` for every eigenvalue, which also
/// accounts for imaginary parts: `min -2 Re lambda / |lambda|^2`. Eigenvalues
/// with `|Re lambda| <= tol` are treated as roundoff on the imaginary axis and skipped.
pub fn explicit_dt_bound_complex<T: Real>(eigs: &[Complex<T>], tol: T) -> ExplicitBound<T> {
    match explicit_dt_bound(eigs, tol) {
        ExplicitBound::Bound(_) => {
            let b = eigs
                .iter()
                .filter(|l| l.re < -tol)
                .map(|l| -T::lit(2.0) * l.re / l.norm_sqr())
                .fold(T::infinity(), T::min);
            if b.is_finite() {
                ExplicitBound::Bound(b)
            } else {
                ExplicitBound::Unbounded
            }
        }
        other => other,
    }
}

#[derive(Clone, Debug)]
pub struct StabilityReport<T> {
    pub eigenvalues: Vec<Complex<T>>,
    pub amplification: Vec<T>,
    pub max_amplification: T,
    pub explicit_bound: ExplicitBound<T>,
}

impl<T: Real> StabilityReport<T> {
    /// CSV with header `re_lambda,im_lambda,amplification`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["re_lambda", "im_lambda", "amplification"])?;
        for (l, g) in self.eigenvalues.iter().zip(&self.amplification) {
            out.write_record([l.re.to_string(), l.im.to_string(), g.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Tolerance on positive real parts used by [`stability_report`].
pub const DEFAULT_RE_TOL: f64 = 1e-6;

/// Eigenvalues of the problem's spatial operator and the per-eigenvalue
/// amplification factors of the theta scheme.
pub fn stability_report<T: Real>(
    problem: &Problem<T>,
    theta: T,
    dt: T,
    ops: &Operators<T>,
) -> Result<StabilityReport<T>> {
    let l_i = problem.spatial_operator(ops)?;
    let eigenvalues = compute_m_eigs(&l_i, &ops.a)?;
    let amplification = eigenvalues
        .iter()
        .map(|&lam| match problem {
            Problem::ConvDiff(_) => amplification_convdiff(lam, theta, dt),
            Problem::Pseudo(s) => amplification_pseudo(lam, theta, dt, s.alpha, s.beta),
        })
        .collect::<Result<Vec<T>>>()?;
    let max_amplification = amplification.iter().fold(T::zero(), |m, &g| m.max(g));
    let explicit_bound = explicit_dt_bound(&eigenvalues, T::lit(DEFAULT_RE_TOL));
    Ok(StabilityReport {
        eigenvalues,
        amplification,
        max_amplification,
        explicit_bound,
    })
}

/// Spectral radius of `C^{-1} D`, the exact one-step propagator. Dense; small systems only.
pub fn propagator_spectral_radius<T: Real>(sys: &ThetaSystem<T>) -> Result<T> {
    let n = sys.c.n_rows();
    if n > MAX_EIGEN_DIM {
        return Err(Error::SizeGuard {
            n,
            limit: MAX_EIGEN_DIM,
        });
    }
    let lu = Lu::factor(&sys.c.to_dense())?;
    let k = solve_matrix(&lu, &sys.d.to_dense());
    Ok(dense_eigenvalues(&k)?
        .iter()
        .fold(T::zero(), |m, l| m.max(l.norm())))
}
