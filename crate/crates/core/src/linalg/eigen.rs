//! Eigenvalues of a dense real nonsymmetric matrix: Householder reduction to
//! upper Hessenberg form followed by the Francis double-shift QR iteration
//! (the eigenvalue-only path of the EISPACK `orthes`/`hqr` pair).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::DenseMatrix;

/// Largest matrix accepted by [`dense_eigenvalues`].
pub const MAX_EIGEN_DIM: usize = 4096;

const MAX_ITER_PER_ROOT: usize = 60;

/// Orthogonally similar upper Hessenberg matrix.
pub fn hessenberg<T: Real>(a: &DenseMatrix<T>) -> DenseMatrix<T> {
    assert!(a.is_square());
    let n = a.rows();
    let mut h = a.clone();
    if n < 3 {
        return h;
    }
    let mut ort = vec![T::zero(); n];
    let high = n - 1;
    for m in 1..high {
        let scale = (m..=high).fold(T::zero(), |s, i| s + h[(i, m - 1)].abs());
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        h[(m, m - 1)] = scale * g;
        for i in m + 1..=high {
            h[(i, m - 1)] = T::zero();
        }
    }
    h
}

pub(crate) fn check_size(n: usize) -> Result<()> {
    if n > MAX_EIGEN_DIM {
        return Err(Error::SizeGuard {
            n,
            limit: MAX_EIGEN_DIM,
        });
    }
    Ok(())
}

/// All eigenvalues of a square matrix, in the order they deflate.
pub fn dense_eigenvalues<T: Real>(a: &DenseMatrix<T>) -> Result<Vec<Complex<T>>> {
    if !a.is_square() {
        return Err(Error::Dimension("eigenvalues need a square matrix".into()));
    }
    let nn = a.rows();
    check_size(nn)?;
    if nn == 0 {
        return Ok(Vec::new());
    }
    let mut h = hessenberg(a);
    let mut wr = vec![T::zero(); nn];
    let mut wi = vec![T::zero(); nn];
    let eps = T::epsilon();
    let two = T::lit(2.0);

    let mut norm = T::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut found = 0usize;
    let mut en = nn as isize - 1;
    let mut iter = 0usize;
    let mut exshift = T::zero();
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);

    while en >= 0 {
        let n = en as usize;
        // look for a single small subdiagonal element
        let mut l = n;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            wr[n] = h[(n, n)] + exshift;
            wi[n] = T::zero();
            en -= 1;
            iter = 0;
            found += 1;
        } else if l + 1 == n {
            w = h[(n, n - 1)] * h[(n - 1, n)];
            p = (h[(n - 1, n - 1)] - h[(n, n)]) / two;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[(n, n)] + exshift;
            if q >= T::zero() {
                z = if p >= T::zero() { p + z } else { p - z };
                wr[n - 1] = x + z;
                wr[n] = if z != T::zero() { x - w / z } else { x + z };
                wi[n - 1] = T::zero();
                wi[n] = T::zero();
            } else {
                wr[n - 1] = x + p;
                wr[n] = x + p;
                wi[n - 1] = z;
                wi[n] = -z;
            }
            en -= 2;
            iter = 0;
            found += 2;
        } else {
            x = h[(n, n)];
            y = h[(n - 1, n - 1)];
            w = h[(n, n - 1)] * h[(n - 1, n)];

            if iter == 10 {
                exshift += x;
                for i in 0..=n {
                    h[(i, i)] -= x;
                }
                s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) / two;
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / two + s);
                    for i in 0..=n {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > MAX_ITER_PER_ROOT {
                return Err(Error::NoConvergence { found, n: nn });
            }

            // look for two consecutive small subdiagonal elements
            let mut m = n - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps
                    * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=n {
                h[(i, i - 2)] = T::zero();
                if i > m + 2 {
                    h[(i, i - 3)] = T::zero();
                }
            }

            // double QR step on rows l..=n, columns m..=n
            for k in m..n {
                let notlast = k != n - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s != T::zero() {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..=n {
                        let mut pp = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            pp += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= pp * z;
                        }
                        h[(k, j)] -= pp * x;
                        h[(k + 1, j)] -= pp * y;
                    }
                    for i in l..=n.min(k + 3) {
                        let mut pp = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            pp += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= pp * r;
                        }
                        h[(i, k)] -= pp;
                        h[(i, k + 1)] -= pp * q;
                    }
                }
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex::new(re, im))
        .collect())
}
