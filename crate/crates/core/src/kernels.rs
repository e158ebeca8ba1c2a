//! Radial kernels with closed-form radial derivatives.
//!
//! Every family except the thin-plate spline is written as `phi(r) = f(eps * r)`,
//! so derivatives in `r` pick up powers of `eps` and the shape-free profile
//! `f` is evaluated at `s = eps * r`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Gaussian,
    Multiquadric,
    InverseMultiquadric,
    ThinPlateSpline,
    Matern4,
    Matern2,
    Wendland4,
    Wendland2,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 8] = [
        KernelFamily::Gaussian,
        KernelFamily::Multiquadric,
        KernelFamily::InverseMultiquadric,
        KernelFamily::ThinPlateSpline,
        KernelFamily::Matern4,
        KernelFamily::Matern2,
        KernelFamily::Wendland4,
        KernelFamily::Wendland2,
    ];

    /// Short lowercase tag used on the command line and in CSV output.
    pub fn tag(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "ga",
            KernelFamily::Multiquadric => "mq",
            KernelFamily::InverseMultiquadric => "imq",
            KernelFamily::ThinPlateSpline => "tps",
            KernelFamily::Matern4 => "m4",
            KernelFamily::Matern2 => "m2",
            KernelFamily::Wendland4 => "w4",
            KernelFamily::Wendland2 => "w2",
        }
    }

    /// Strictly positive definite on the plane, so usable by the collocation solver.
    pub fn is_positive_definite(self) -> bool {
        !matches!(self, KernelFamily::Multiquadric | KernelFamily::ThinPlateSpline)
    }

    pub fn is_compactly_supported(self) -> bool {
        matches!(self, KernelFamily::Wendland2 | KernelFamily::Wendland4)
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        KernelFamily::ALL
            .into_iter()
            .find(|k| k.tag() == lower)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown kernel '{s}'")))
    }
}

/// A kernel family together with its shape parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec<T> {
    family: KernelFamily,
    epsilon: T,
    nu: u32,
}

impl<T: Real> KernelSpec<T> {
    /// Any family other than TPS; `epsilon` must be positive and finite.
    pub fn new(family: KernelFamily, epsilon: T) -> Result<Self> {
        if family == KernelFamily::ThinPlateSpline {
            return Self::thin_plate(1);
        }
        if !(epsilon > T::zero()) || !epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "shape parameter must be positive and finite, got {epsilon}"
            )));
        }
        Ok(Self {
            family,
            epsilon,
            nu: 1,
        })
    }

    /// `(-1)^(nu+1) r^(2 nu) log r`.
    pub fn thin_plate(nu: u32) -> Result<Self> {
        if nu == 0 {
            return Err(Error::InvalidConfig("TPS order nu must be at least 1".into()));
        }
        Ok(Self {
            family: KernelFamily::ThinPlateSpline,
            epsilon: T::one(),
            nu,
        })
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    /// The same kernel over another scalar type (shape parameter rounded through `f64`).
    pub fn cast<U: Real>(&self) -> KernelSpec<U> {
        KernelSpec {
            family: self.family,
            epsilon: U::lit(self.epsilon.to_f64_lossy()),
            nu: self.nu,
        }
    }

    /// Order of conditional positive definiteness: 0 for PD kernels.
    pub fn cpd_order(&self) -> usize {
        match self.family {
            KernelFamily::Multiquadric => 1,
            KernelFamily::ThinPlateSpline => self.nu as usize + 1,
            _ => 0,
        }
    }

    /// Radius beyond which the kernel vanishes, if any.
    pub fn support_radius(&self) -> Option<T> {
        self.family
            .is_compactly_supported()
            .then(|| T::one() / self.epsilon)
    }

    pub fn eval(&self, r: T) -> T {
        let r = r.abs();
        if self.family == KernelFamily::ThinPlateSpline {
            if r == T::zero() {
                return T::zero();
            }
            return self.tps_sign() * r.powi(2 * self.nu as i32) * r.ln();
        }
        profile(self.family, self.epsilon * r).0
    }

    /// `d phi / d r`.
    pub fn radial_d1(&self, r: T) -> Result<T> {
        let r = r.abs();
        if self.family == KernelFamily::ThinPlateSpline {
            let (d1, _) = self.tps_derivs(r)?;
            return Ok(d1);
        }
        Ok(self.epsilon * profile(self.family, self.epsilon * r).1)
    }

    /// `d^2 phi / d r^2`.
    pub fn radial_d2(&self, r: T) -> Result<T> {
        let r = r.abs();
        if self.family == KernelFamily::ThinPlateSpline {
            let (_, d2) = self.tps_derivs(r)?;
            return Ok(d2);
        }
        Ok(self.epsilon * self.epsilon * profile(self.family, self.epsilon * r).3)
    }

    /// `phi'(r) / r`, so that the gradient of `phi(|x - c|)` is `grad_factor * (x - c)`.
    pub fn grad_factor(&self, r: T) -> Result<T> {
        let r = r.abs();
        if self.family == KernelFamily::ThinPlateSpline {
            let (d1, _) = self.tps_derivs(r)?;
            return Ok(d1 / r);
        }
        Ok(self.epsilon * self.epsilon * profile(self.family, self.epsilon * r).2)
    }

    /// Laplacian of `phi(|x|)` in `d` dimensions at `|x| = r`.
    pub fn laplacian(&self, r: T, d: usize) -> Result<T> {
        if !(1..=3).contains(&d) {
            return Err(Error::Domain(format!("dimension {d} not in 1..=3")));
        }
        let r = r.abs();
        let dm1 = T::from_usize_lossy(d - 1);
        if self.family == KernelFamily::ThinPlateSpline {
            let (d1, d2) = self.tps_derivs(r)?;
            return Ok(d2 + dm1 * d1 / r);
        }
        let (_, _, fp_s, fpp) = profile(self.family, self.epsilon * r);
        Ok(self.epsilon * self.epsilon * (fpp + dm1 * fp_s))
    }

    /// Value, gradient factor and planar Laplacian in one pass.
    pub fn eval_planar(&self, r: T) -> Result<(T, T, T)> {
        let r = r.abs();
        if self.family == KernelFamily::ThinPlateSpline {
            let (d1, d2) = self.tps_derivs(r)?;
            return Ok((self.eval(r), d1 / r, d2 + d1 / r));
        }
        let (f, _, fp_s, fpp) = profile(self.family, self.epsilon * r);
        let e2 = self.epsilon * self.epsilon;
        Ok((f, e2 * fp_s, e2 * (fpp + fp_s)))
    }

    fn tps_sign(&self) -> T {
        if self.nu % 2 == 1 {
            T::one()
        } else {
            -T::one()
        }
    }

    fn tps_derivs(&self, r: T) -> Result<(T, T)> {
        if r == T::zero() {
            return Err(Error::Domain(
                "thin-plate spline derivatives are undefined at r = 0".into(),
            ));
        }
        let two_nu = T::from_usize_lossy(2 * self.nu as usize);
        let log_r = r.ln();
        let inner = two_nu * log_r + T::one();
        let d1 = self.tps_sign() * r.powi(2 * self.nu as i32 - 1) * inner;
        let d2 = self.tps_sign()
            * r.powi(2 * self.nu as i32 - 2)
            * ((two_nu - T::one()) * inner + two_nu);
        Ok((d1, d2))
    }
}

impl<T: Real> fmt::Display for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.family == KernelFamily::ThinPlateSpline {
            write!(f, "tps(nu={})", self.nu)
        } else {
            write!(f, "{}(eps={})", self.family, self.epsilon)
        }
    }
}

/// `(f(s), f'(s), f'(s)/s, f''(s))` for the shape-free profile. The middle
/// quotient is written in closed form so `s = 0` needs no special case.
fn profile<T: Real>(family: KernelFamily, s: T) -> (T, T, T, T) {
    let one = T::one();
    let two = T::lit(2.0);
    match family {
        KernelFamily::Gaussian => {
            let e = (-s * s).exp();
            (e, -two * s * e, -two * e, (T::lit(4.0) * s * s - two) * e)
        }
        KernelFamily::Multiquadric => {
            let q = one + s * s;
            let sq = q.sqrt();
            (sq, s / sq, one / sq, one / (q * sq))
        }
        KernelFamily::InverseMultiquadric => {
            let q = one + s * s;
            let inv = one / q.sqrt();
            let inv3 = inv * inv * inv;
            (
                inv,
                -s * inv3,
                -inv3,
                (two * s * s - one) * inv3 * inv * inv,
            )
        }
        KernelFamily::Matern4 => {
            let e = (-s).exp();
            (
                e * (s * s + T::lit(3.0) * s + T::lit(3.0)),
                -s * (s + one) * e,
                -(s + one) * e,
                (s * s - s - one) * e,
            )
        }
        KernelFamily::Matern2 => {
            let e = (-s).exp();
            (e * (s + one), -s * e, -e, (s - one) * e)
        }
        KernelFamily::Wendland2 => {
            if s >= one {
                return (T::zero(), T::zero(), T::zero(), T::zero());
            }
            let t = one - s;
            let t2 = t * t;
            let t3 = t2 * t;
            let c = T::lit(20.0);
            (
                t2 * t2 * (T::lit(4.0) * s + one),
                -c * s * t3,
                -c * t3,
                c * t2 * (T::lit(4.0) * s - one),
            )
        }
        KernelFamily::Wendland4 => {
            if s >= one {
                return (T::zero(), T::zero(), T::zero(), T::zero());
            }
            let t = one - s;
            let t2 = t * t;
            let t4 = t2 * t2;
            let t5 = t4 * t;
            let c = T::lit(56.0);
            let lin = T::lit(5.0) * s + one;
            (
                t4 * t2 * (T::lit(35.0) * s * s + T::lit(18.0) * s + T::lit(3.0)),
                -c * s * t5 * lin,
                -c * t5 * lin,
                -c * t4 * (one + T::lit(4.0) * s - T::lit(35.0) * s * s),
            )
        }
        KernelFamily::ThinPlateSpline => unreachable!("TPS has no shape-free profile"),
    }
}
