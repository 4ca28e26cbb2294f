//! Forward-mode dual numbers with a single tangent direction.
//!
//! `Dual<S>` is itself a [`Scalar`], so duals nest: `Dual<Dual<f64>>` carries
//! a mixed second partial in its `eps.eps` slot, `Dual<Dual<Dual<f64>>>` a
//! third. Comparisons look at the real part only.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::num::FpCategory;
use std::ops::{
    Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign,
};

use num_traits::{Float, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default)]
pub struct Dual<S> {
    pub re: S,
    pub eps: S,
}

impl<S: Scalar> Dual<S> {
    #[inline]
    pub fn new(re: S, eps: S) -> Self {
        Dual { re, eps }
    }

    /// A constant: zero tangent.
    #[inline]
    pub fn constant(re: S) -> Self {
        Dual { re, eps: S::zero() }
    }

    /// The seeded independent variable: unit tangent.
    #[inline]
    pub fn variable(re: S) -> Self {
        Dual { re, eps: S::one() }
    }

    /// Chain rule for a unary function with value `f` and derivative `df`.
    #[inline]
    fn chain(self, f: S, df: S) -> Self {
        Dual { re: f, eps: df * self.eps }
    }
}

impl<S: Scalar> fmt::Display for Dual<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} + {:?}ε", self.re, self.eps)
    }
}

impl<S: Scalar> PartialEq for Dual<S> {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re
    }
}

impl<S: Scalar> PartialOrd for Dual<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual { re: self.re + rhs.re, eps: self.eps + rhs.eps }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual { re: self.re - rhs.re, eps: self.eps - rhs.eps }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual { re: self.re * rhs.re, eps: self.re * rhs.eps + self.eps * rhs.re }
    }
}

impl<S: Scalar> Div for Dual<S> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = S::one() / rhs.re;
        let q = self.re * inv;
        Dual { re: q, eps: (self.eps - q * rhs.eps) * inv }
    }
}

impl<S: Scalar> Rem for Dual<S> {
    type Output = Self;
    fn rem(self, rhs: Self) -> Self {
        let k = (self.re / rhs.re).trunc();
        Dual { re: self.re % rhs.re, eps: self.eps - k * rhs.eps }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<S: Scalar> AddAssign for Dual<S> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<S: Scalar> SubAssign for Dual<S> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<S: Scalar> MulAssign for Dual<S> {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<S: Scalar> DivAssign for Dual<S> {
    #[inline]
    fn div_assign(&mut self, rhs: Self) {
        *self = *self / rhs;
    }
}

impl<S: Scalar> Sum for Dual<S> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl<S: Scalar> Zero for Dual<S> {
    #[inline]
    fn zero() -> Self {
        Dual { re: S::zero(), eps: S::zero() }
    }
    #[inline]
    fn is_zero(&self) -> bool {
        self.re.is_zero()
    }
}

impl<S: Scalar> One for Dual<S> {
    #[inline]
    fn one() -> Self {
        Dual::constant(S::one())
    }
}

impl<S: Scalar> Num for Dual<S> {
    type FromStrRadixErr = S::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        S::from_str_radix(s, radix).map(Dual::constant)
    }
}

impl<S: Scalar> ToPrimitive for Dual<S> {
    fn to_i64(&self) -> Option<i64> {
        self.re.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.re.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.re.to_f64()
    }
}

impl<S: Scalar> NumCast for Dual<S> {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        <S as NumCast>::from(n).map(Dual::constant)
    }
}

impl<S: Scalar> FromPrimitive for Dual<S> {
    fn from_i64(n: i64) -> Option<Self> {
        S::from_i64(n).map(Dual::constant)
    }
    fn from_u64(n: u64) -> Option<Self> {
        S::from_u64(n).map(Dual::constant)
    }
    fn from_f64(n: f64) -> Option<Self> {
        S::from_f64(n).map(Dual::constant)
    }
}

impl<S: Scalar> Float for Dual<S> {
    fn nan() -> Self {
        Dual::constant(S::nan())
    }
    fn infinity() -> Self {
        Dual::constant(S::infinity())
    }
    fn neg_infinity() -> Self {
        Dual::constant(S::neg_infinity())
    }
    fn neg_zero() -> Self {
        Dual::constant(S::neg_zero())
    }
    fn min_value() -> Self {
        Dual::constant(S::min_value())
    }
    fn min_positive_value() -> Self {
        Dual::constant(S::min_positive_value())
    }
    fn max_value() -> Self {
        Dual::constant(S::max_value())
    }
    fn is_nan(self) -> bool {
        self.re.is_nan() || self.eps.is_nan()
    }
    fn is_infinite(self) -> bool {
        self.re.is_infinite() || self.eps.is_infinite()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
    fn is_normal(self) -> bool {
        self.re.is_normal()
    }
    fn classify(self) -> FpCategory {
        self.re.classify()
    }
    fn floor(self) -> Self {
        Dual::constant(self.re.floor())
    }
    fn ceil(self) -> Self {
        Dual::constant(self.re.ceil())
    }
    fn round(self) -> Self {
        Dual::constant(self.re.round())
    }
    fn trunc(self) -> Self {
        Dual::constant(self.re.trunc())
    }
    fn fract(self) -> Self {
        Dual { re: self.re.fract(), eps: self.eps }
    }
    fn abs(self) -> Self {
        if self.re < S::zero() {
            -self
        } else {
            self
        }
    }
    fn signum(self) -> Self {
        Dual::constant(self.re.signum())
    }
    fn is_sign_positive(self) -> bool {
        self.re.is_sign_positive()
    }
    fn is_sign_negative(self) -> bool {
        self.re.is_sign_negative()
    }
    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }
    fn recip(self) -> Self {
        let r = self.re.recip();
        self.chain(r, -r * r)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let prev = self.re.powi(n - 1);
        self.chain(prev * self.re, S::cst(n as f64) * prev)
    }
    fn powf(self, e: Self) -> Self {
        let v = self.re.powf(e.re);
        let mut eps = e.re * self.re.powf(e.re - S::one()) * self.eps;
        if !e.eps.is_exact_zero() {
            eps += v * self.re.ln() * e.eps;
        }
        Dual { re: v, eps }
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, S::cst(0.5) / s)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn exp2(self) -> Self {
        let e = self.re.exp2();
        self.chain(e, e * S::cst(std::f64::consts::LN_2))
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn log(self, base: Self) -> Self {
        self.ln() / base.ln()
    }
    fn log2(self) -> Self {
        self.chain(self.re.log2(), (self.re * S::cst(std::f64::consts::LN_2)).recip())
    }
    fn log10(self) -> Self {
        self.chain(self.re.log10(), (self.re * S::cst(std::f64::consts::LN_10)).recip())
    }
    fn max(self, other: Self) -> Self {
        if other.re > self.re {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other.re < self.re {
            other
        } else {
            self
        }
    }
    fn abs_sub(self, other: Self) -> Self {
        if self.re > other.re {
            self - other
        } else {
            Self::zero()
        }
    }
    fn cbrt(self) -> Self {
        let c = self.re.cbrt();
        self.chain(c, (S::cst(3.0) * c * c).recip())
    }
    fn hypot(self, other: Self) -> Self {
        (self * self + other * other).sqrt()
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, S::one() + t * t)
    }
    fn asin(self) -> Self {
        self.chain(self.re.asin(), (S::one() - self.re * self.re).sqrt().recip())
    }
    fn acos(self) -> Self {
        self.chain(self.re.acos(), -(S::one() - self.re * self.re).sqrt().recip())
    }
    fn atan(self) -> Self {
        self.chain(self.re.atan(), (S::one() + self.re * self.re).recip())
    }
    fn atan2(self, other: Self) -> Self {
        let d = self.re * self.re + other.re * other.re;
        Dual {
            re: self.re.atan2(other.re),
            eps: (other.re * self.eps - self.re * other.eps) / d,
        }
    }
    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
    fn exp_m1(self) -> Self {
        self.chain(self.re.exp_m1(), self.re.exp())
    }
    fn ln_1p(self) -> Self {
        self.chain(self.re.ln_1p(), (S::one() + self.re).recip())
    }
    fn sinh(self) -> Self {
        self.chain(self.re.sinh(), self.re.cosh())
    }
    fn cosh(self) -> Self {
        self.chain(self.re.cosh(), self.re.sinh())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, S::one() - t * t)
    }
    fn asinh(self) -> Self {
        self.chain(self.re.asinh(), (self.re * self.re + S::one()).sqrt().recip())
    }
    fn acosh(self) -> Self {
        self.chain(self.re.acosh(), (self.re * self.re - S::one()).sqrt().recip())
    }
    fn atanh(self) -> Self {
        self.chain(self.re.atanh(), (S::one() - self.re * self.re).recip())
    }
    fn integer_decode(self) -> (u64, i16, i8) {
        self.re.integer_decode()
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    #[inline]
    fn re(&self) -> f64 {
        self.re.re()
    }

    #[inline]
    fn is_exact_zero(&self) -> bool {
        self.re.is_exact_zero() && self.eps.is_exact_zero()
    }
}

/// First derivative of `f` at `x`.
pub fn derivative<S: Scalar>(x: S, f: impl Fn(Dual<S>) -> Dual<S>) -> S {
    f(Dual::variable(x)).eps
}
