//! Hager's 1-norm estimator with Higham's refinements (the LAPACK `xLACON`
//! scheme), driven only by solves with `A` and `A^T`.

use crate::scalar::Real;

use super::LinearSolver;

const MAX_ITER: usize = 5;

/// Lower-bound estimate of `||A^{-1}||_1`.
pub fn inverse_norm1_estimate<T: Real, S: LinearSolver<T> + ?Sized>(solver: &S) -> T {
    let n = solver.dim();
    if n == 0 {
        return T::zero();
    }
    let norm1 = |v: &[T]| v.iter().fold(T::zero(), |s, &x| s + x.abs());
    let sign = |v: T| if v >= T::zero() { T::one() } else { -T::one() };

    let mut x = vec![T::one() / T::from_usize_lossy(n); n];
    solver.solve_in_place(&mut x);
    if n == 1 {
        return x[0].abs();
    }
    let mut est = norm1(&x);
    let mut xi: Vec<T> = x.iter().map(|&v| sign(v)).collect();
    let mut z = solver.solve_transpose(&xi);
    let mut j = argmax_abs(&z);

    for _ in 1..MAX_ITER {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        solver.solve_in_place(&mut e);
        let est_old = est;
        est = norm1(&e);
        let new_xi: Vec<T> = e.iter().map(|&v| sign(v)).collect();
        if new_xi == xi || est <= est_old {
            est = est.max(est_old);
            break;
        }
        xi = new_xi;
        z = solver.solve_transpose(&xi);
        let j_last = j;
        j = argmax_abs(&z);
        if z[j_last].abs() == z[j].abs() {
            break;
        }
    }

    // Higham's alternating-sign test vector guards against the worst cases.
    let denom = T::from_usize_lossy(n - 1);
    let mut alt: Vec<T> = (0..n)
        .map(|i| {
            let mag = T::one() + T::from_usize_lossy(i) / denom;
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect();
    solver.solve_in_place(&mut alt);
    let alt_est = T::lit(2.0) * norm1(&alt) / (T::lit(3.0) * T::from_usize_lossy(n));
    est.max(alt_est)
}

/// `||A||_1 * est(||A^{-1}||_1)`.
pub fn cond_estimate_1norm<T: Real, S: LinearSolver<T> + ?Sized>(norm1_a: T, solver: &S) -> T {
    norm1_a * inverse_norm1_estimate(solver)
}

fn argmax_abs<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}
