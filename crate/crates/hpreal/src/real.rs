use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::hp::HPReal;

/// Scalar operations shared by `f64` and [`HPReal`].
///
/// Constants are created with [`Real::lift`] from an existing value so that
/// extended-precision code inherits the precision of its inputs.
///
/// Domain violations (log of a non-positive number, sqrt of a negative, ...)
/// give NaN for `f64` and panic for [`HPReal`]; callers check domains first.
pub trait Real:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    /// `x` at the precision of `self`.
    fn lift(&self, x: f64) -> Self;

    /// `num / den` at the precision of `self`, correctly rounded.
    fn ratio(&self, num: i64, den: i64) -> Self;

    /// Parse a decimal literal at the precision of `self`.
    fn parse_like(&self, s: &str) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Unit roundoff relative to one.
    fn epsilon_like(&self) -> Self;

    /// Decimal digits carried by the representation.
    fn precision_digits(&self) -> u32;

    fn is_finite_value(&self) -> bool;

    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn exp_m1(&self) -> Self;
    fn ln(&self) -> Self;
    fn ln_1p(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;
    fn tanh(&self) -> Self;
    fn sech(&self) -> Self;
    fn atanh(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn pi_like(&self) -> Self;

    fn zero_like(&self) -> Self {
        self.lift(0.0)
    }

    fn one_like(&self) -> Self {
        self.lift(1.0)
    }

    fn is_zero_value(&self) -> bool {
        *self == self.zero_like()
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }
}

impl Real for f64 {
    fn lift(&self, x: f64) -> Self {
        x
    }

    fn ratio(&self, num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn parse_like(&self, s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn epsilon_like(&self) -> Self {
        f64::EPSILON
    }

    fn precision_digits(&self) -> u32 {
        f64::DIGITS
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn exp_m1(&self) -> Self {
        f64::exp_m1(*self)
    }

    fn ln(&self) -> Self {
        f64::ln(*self)
    }

    fn ln_1p(&self) -> Self {
        f64::ln_1p(*self)
    }

    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }

    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }

    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }

    fn sech(&self) -> Self {
        let a = f64::abs(*self);
        // 2e^{-a}/(1+e^{-2a}) stays finite where cosh overflows
        let e = (-a).exp();
        2.0 * e / (1.0 + e * e)
    }

    fn atanh(&self) -> Self {
        f64::atanh(*self)
    }

    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }

    fn pi_like(&self) -> Self {
        std::f64::consts::PI
    }
}

impl Real for HPReal {
    fn lift(&self, x: f64) -> Self {
        HPReal::from_f64(x, self.digits())
    }

    fn ratio(&self, num: i64, den: i64) -> Self {
        HPReal::from_ratio(num, den, self.digits())
    }

    fn parse_like(&self, s: &str) -> Option<Self> {
        HPReal::parse(s, self.digits()).ok()
    }

    fn to_f64(&self) -> f64 {
        HPReal::to_f64(self)
    }

    fn epsilon_like(&self) -> Self {
        HPReal::epsilon(self.digits())
    }

    fn precision_digits(&self) -> u32 {
        self.digits()
    }

    fn is_finite_value(&self) -> bool {
        true
    }

    fn abs(&self) -> Self {
        HPReal::abs(self)
    }

    fn sqrt(&self) -> Self {
        HPReal::sqrt(self)
    }

    fn exp(&self) -> Self {
        HPReal::exp(self)
    }

    fn exp_m1(&self) -> Self {
        HPReal::exp_m1(self)
    }

    fn ln(&self) -> Self {
        HPReal::ln(self)
    }

    fn ln_1p(&self) -> Self {
        HPReal::ln_1p(self)
    }

    fn sinh(&self) -> Self {
        HPReal::sinh(self)
    }

    fn cosh(&self) -> Self {
        HPReal::cosh(self)
    }

    fn tanh(&self) -> Self {
        HPReal::tanh(self)
    }

    fn sech(&self) -> Self {
        HPReal::sech(self)
    }

    fn atanh(&self) -> Self {
        HPReal::atanh(self)
    }

    fn powi(&self, n: i32) -> Self {
        HPReal::powi(self, n)
    }

    fn pi_like(&self) -> Self {
        HPReal::pi(self.digits())
    }
}
