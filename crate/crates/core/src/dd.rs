//! Double-double arithmetic: an unevaluated sum `hi + lo` of two `f64` values
//! giving about 32 significant decimal digits.
//!
//! Arithmetic, `sqrt`, `exp`, `ln` and integer powers are accurate to roughly
//! `2^-104` relative. Trigonometric, hyperbolic and inverse functions are
//! evaluated through `f64` and carry only double precision; the type is meant
//! for the kernel matrix solves, which never call them.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{
    Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign,
};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319046813846299558e-17,
};
const PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.224646799147353207e-16,
};
const E: Dd = Dd {
    hi: std::f64::consts::E,
    lo: 1.445646891729250158e-16,
};
const LN10: Dd = Dd {
    hi: std::f64::consts::LN_10,
    lo: -2.170756223382249351e-16,
};

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Self { hi, lo }
    }

    pub const fn from_f64_exact(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        Self::renorm(p, e + self.lo * b)
    }

    fn ldexp(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Self {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    fn from_f64_fn(self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_f64_exact(f(self.hi + self.lo))
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Self::from_f64_exact(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        Dd::renorm(s1, s2 + t2)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() || q1 == 0.0 {
            return Dd::from_f64_exact(q1);
        }
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Dd::renorm(q1, q2) + Dd::from_f64_exact(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        self - (self / b).trunc() * b
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt),*) => {$(
        impl $tr for Dd {
            fn $m(&mut self, b: Dd) {
                *self = *self $op b;
            }
        }
    )*};
}
assign_ops!(AddAssign add_assign +, SubAssign sub_assign -, MulAssign mul_assign *, DivAssign div_assign /, RemAssign rem_assign %);

impl PartialOrd for Dd {
    fn partial_cmp(&self, b: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&b.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&b.lo),
            o => Some(o),
        }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&(self.hi + self.lo), f)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::from_f64_exact(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::from_f64_exact(1.0)
    }
}

impl Num for Dd {
    type FromStrRadixErr = num_traits::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        f64::from_str_radix(s, radix).map(Dd::from_f64_exact)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        let t = self.trunc();
        let hi = t.hi.to_i64()?;
        hi.checked_add(t.lo.to_i64()?)
    }
    fn to_u64(&self) -> Option<u64> {
        let t = self.trunc();
        let hi = t.hi.to_i128()?;
        u64::try_from(hi + t.lo.to_i128()?).ok()
    }
    fn to_f64(&self) -> Option<f64> {
        Some(self.hi + self.lo)
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd::renorm(hi, lo))
    }
    fn from_u64(n: u64) -> Option<Self> {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Some(Dd::renorm(hi, lo))
    }
    fn from_f64(x: f64) -> Option<Self> {
        Some(Dd::from_f64_exact(x))
    }
}

impl NumCast for Dd {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        n.to_f64().map(Dd::from_f64_exact)
    }
}

impl Float for Dd {
    fn nan() -> Self {
        Dd::from_f64_exact(f64::NAN)
    }
    fn infinity() -> Self {
        Dd::from_f64_exact(f64::INFINITY)
    }
    fn neg_infinity() -> Self {
        Dd::from_f64_exact(f64::NEG_INFINITY)
    }
    fn neg_zero() -> Self {
        Dd::from_f64_exact(-0.0)
    }
    fn min_value() -> Self {
        Dd::from_f64_exact(f64::MIN)
    }
    fn min_positive_value() -> Self {
        Dd::from_f64_exact(f64::MIN_POSITIVE)
    }
    fn max_value() -> Self {
        Dd::from_f64_exact(f64::MAX)
    }
    fn epsilon() -> Self {
        Dd::from_f64_exact(2f64.powi(-104))
    }
    fn is_nan(self) -> bool {
        self.hi.is_nan() || self.lo.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.hi.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
    fn is_normal(self) -> bool {
        self.hi.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.hi.classify()
    }
    fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            Dd::renorm(hi, self.lo.floor())
        } else {
            Dd::from_f64_exact(hi)
        }
    }
    fn ceil(self) -> Self {
        let hi = self.hi.ceil();
        if hi == self.hi {
            Dd::renorm(hi, self.lo.ceil())
        } else {
            Dd::from_f64_exact(hi)
        }
    }
    fn round(self) -> Self {
        let r = (self + Dd::from_f64_exact(0.5)).floor();
        if self.is_sign_negative() {
            -((-self).round())
        } else {
            r
        }
    }
    fn trunc(self) -> Self {
        if self.is_sign_negative() {
            self.ceil()
        } else {
            self.floor()
        }
    }
    fn fract(self) -> Self {
        self - self.trunc()
    }
    fn abs(self) -> Self {
        if self.is_sign_negative() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Dd::from_f64_exact(self.hi.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.hi.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.hi.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        Dd::one() / self
    }
    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut k = n.unsigned_abs();
        let mut acc = Dd::one();
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }
    fn powf(self, n: Self) -> Self {
        (n * self.ln()).exp()
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64_exact(self.hi.sqrt());
        }
        if !self.hi.is_finite() {
            return self;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let (p, e) = two_prod(ax, ax);
        let diff = (self - Dd::renorm(p, e)).hi;
        Dd::renorm(ax, diff * (x * 0.5))
    }
    fn exp(self) -> Self {
        if self.hi > 709.8 {
            return Dd::infinity();
        }
        if self.hi < -745.2 {
            return Dd::zero();
        }
        if self.hi == 0.0 {
            return Dd::one();
        }
        // exp(x) = 2^k exp(r)^(2^10), |r| <= ln2 / 2^11
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-10);
        let mut term = r;
        let mut sum = r;
        for i in 2..=14 {
            term = term * r / Dd::from_f64_exact(i as f64);
            sum += term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        // (1 + s)^2 - 1 = s (2 + s), keeps the small part exact
        for _ in 0..10 {
            sum = sum * (sum + Dd::from_f64_exact(2.0));
        }
        (sum + Dd::one()).ldexp(k as i32)
    }
    fn exp2(self) -> Self {
        (self * LN2).exp()
    }
    fn ln(self) -> Self {
        if self.hi <= 0.0 || !self.hi.is_finite() {
            return Dd::from_f64_exact(self.hi.ln());
        }
        let y = Dd::from_f64_exact(self.hi.ln());
        y + self * (-y).exp() - Dd::one()
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.ln() / LN2
    }
    fn log10(self) -> Self {
        self.ln() / LN10
    }
    fn max(self, b: Self) -> Self {
        if self.is_nan() || b > self {
            b
        } else {
            self
        }
    }
    fn min(self, b: Self) -> Self {
        if self.is_nan() || b < self {
            b
        } else {
            self
        }
    }
    fn abs_sub(self, b: Self) -> Self {
        if self > b {
            self - b
        } else {
            Dd::zero()
        }
    }
    fn cbrt(self) -> Self {
        let y = Dd::from_f64_exact(self.hi.cbrt());
        if y.hi == 0.0 || !y.hi.is_finite() {
            return y;
        }
        // one Newton step on y^3 = x
        y - (y * y * y - self) / (Dd::from_f64_exact(3.0) * y * y)
    }
    fn hypot(self, b: Self) -> Self {
        (self * self + b * b).sqrt()
    }
    fn sin(self) -> Self {
        self.from_f64_fn(f64::sin)
    }
    fn cos(self) -> Self {
        self.from_f64_fn(f64::cos)
    }
    fn tan(self) -> Self {
        self.from_f64_fn(f64::tan)
    }
    fn asin(self) -> Self {
        self.from_f64_fn(f64::asin)
    }
    fn acos(self) -> Self {
        self.from_f64_fn(f64::acos)
    }
    fn atan(self) -> Self {
        self.from_f64_fn(f64::atan)
    }
    fn atan2(self, b: Self) -> Self {
        Dd::from_f64_exact((self.hi + self.lo).atan2(b.hi + b.lo))
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        self.exp() - Dd::one()
    }
    fn ln_1p(self) -> Self {
        (self + Dd::one()).ln()
    }
    fn sinh(self) -> Self {
        self.from_f64_fn(f64::sinh)
    }
    fn cosh(self) -> Self {
        self.from_f64_fn(f64::cosh)
    }
    fn tanh(self) -> Self {
        self.from_f64_fn(f64::tanh)
    }
    fn asinh(self) -> Self {
        self.from_f64_fn(f64::asinh)
    }
    fn acosh(self) -> Self {
        self.from_f64_fn(f64::acosh)
    }
    fn atanh(self) -> Self {
        self.from_f64_fn(f64::atanh)
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.hi.integer_decode()
    }
}

impl FloatConst for Dd {
    fn E() -> Self {
        E
    }
    fn FRAC_1_PI() -> Self {
        PI.recip()
    }
    fn FRAC_1_SQRT_2() -> Self {
        Self::SQRT_2().ldexp(-1)
    }
    fn FRAC_2_PI() -> Self {
        PI.recip().ldexp(1)
    }
    fn FRAC_2_SQRT_PI() -> Self {
        PI.sqrt().recip().ldexp(1)
    }
    fn FRAC_PI_2() -> Self {
        PI.ldexp(-1)
    }
    fn FRAC_PI_3() -> Self {
        PI / Dd::from_f64_exact(3.0)
    }
    fn FRAC_PI_4() -> Self {
        PI.ldexp(-2)
    }
    fn FRAC_PI_6() -> Self {
        PI / Dd::from_f64_exact(6.0)
    }
    fn FRAC_PI_8() -> Self {
        PI.ldexp(-3)
    }
    fn LN_10() -> Self {
        LN10
    }
    fn LN_2() -> Self {
        LN2
    }
    fn LOG10_E() -> Self {
        LN10.recip()
    }
    fn LOG2_E() -> Self {
        LN2.recip()
    }
    fn PI() -> Self {
        PI
    }
    fn SQRT_2() -> Self {
        Dd::from_f64_exact(2.0).sqrt()
    }
    fn TAU() -> Self {
        PI.ldexp(1)
    }
    fn LOG10_2() -> Self {
        LN2 / LN10
    }
    fn LOG2_10() -> Self {
        LN10 / LN2
    }
}

impl Real for Dd {}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(x: f64) -> Dd {
        Dd::from_f64_exact(x)
    }

    fn close(a: Dd, b: Dd, tol: f64) -> bool {
        ((a - b).abs() / b.abs().max(Dd::one())).hi < tol
    }

    #[test]
    fn division_is_double_double_accurate() {
        let third = d(1.0) / d(3.0);
        assert!((third * d(3.0) - d(1.0)).abs().hi < 1e-31);
        let q = d(2.0) / d(7.0);
        assert!((q * d(7.0) - d(2.0)).abs().hi < 1e-31);
    }

    #[test]
    fn sqrt_exp_ln_roundtrip() {
        for x in [1e-8, 0.37, 1.0, 2.0, 12.5, 1e6] {
            let s = d(x).sqrt();
            assert!(close(s * s, d(x), 1e-30), "sqrt {x}");
            assert!(close(d(x).ln().exp(), d(x), 1e-29), "exp ln {x}");
        }
        for x in [-30.0, -1.0, -1e-3, 0.5, 3.0, 40.0] {
            assert!(close(d(x).exp().ln(), d(x), 1e-29), "ln exp {x}");
        }
    }

    #[test]
    fn constants_agree_with_series() {
        assert!(close(d(1.0).exp(), E, 1e-31));
        assert!(close(d(2.0).ln(), LN2, 1e-31));
        assert!(close(d(10.0).ln(), LN10, 1e-31));
        // Machin: pi = 16 atan(1/5) - 4 atan(1/239)
        let atan_inv = |n: f64| {
            let x = d(1.0) / d(n);
            let (mut term, mut sum, x2) = (x, x, x * x);
            for k in 1..40 {
                term = -term * x2;
                sum += term / d((2 * k + 1) as f64);
            }
            sum
        };
        let pi = d(16.0) * atan_inv(5.0) - d(4.0) * atan_inv(239.0);
        assert!(close(pi, PI, 1e-31));
    }

    #[test]
    fn integer_conversions() {
        let n = (1i64 << 60) + 7;
        let x = Dd::from_i64(n).unwrap();
        assert_eq!(x.to_i64(), Some(n));
        assert_eq!(d(-2.5).trunc(), d(-2.0));
        assert_eq!(d(-2.5).floor(), d(-3.0));
        assert_eq!(d(2.5).round(), d(3.0));
        assert_eq!(d(7.0).powi(-2), d(1.0) / d(49.0));
    }

    #[test]
    fn ordering_uses_low_part() {
        let a = Dd::new(1.0, 1e-20);
        assert!(a > d(1.0));
        assert_eq!(a.max(d(1.0)), a);
        assert!(a - d(1.0) > d(0.0));
    }
}
