use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::HpError;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working precision in decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionConfig {
    digits: u32,
}

impl PrecisionConfig {
    pub const MIN_DIGITS: u32 = 16;
    pub const DEFAULT_DIGITS: u32 = 50;

    pub fn new(digits: u32) -> Result<Self, HpError> {
        if digits < Self::MIN_DIGITS {
            return Err(HpError::PrecisionTooLow(digits));
        }
        Ok(Self { digits })
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Binary mantissa width used to carry `digits` decimal digits.
    pub fn bits(&self) -> u64 {
        bits_for_digits(self.digits)
    }

    pub fn zero(&self) -> HPReal {
        HPReal::zero(self.digits)
    }

    pub fn one(&self) -> HPReal {
        HPReal::from_i64(1, self.digits)
    }

    pub fn from_f64(&self, x: f64) -> HPReal {
        HPReal::from_f64(x, self.digits)
    }

    pub fn parse(&self, s: &str) -> Result<HPReal, HpError> {
        HPReal::parse(s, self.digits)
    }
}

impl Default for PrecisionConfig {
    fn default() -> Self {
        Self {
            digits: Self::DEFAULT_DIGITS,
        }
    }
}

pub(crate) fn bits_for_digits(digits: u32) -> u64 {
    (f64::from(digits) * LOG2_10).ceil() as u64 + 4
}

/// Binary floating-point value `(-1)^neg * mag * 2^exp`.
///
/// Non-zero magnitudes are normalized to exactly `bits_for_digits(digits)`
/// bits; zero is stored as `mag = 0, exp = 0, neg = false`.
#[derive(Clone)]
pub struct HPReal {
    pub(crate) neg: bool,
    pub(crate) mag: BigUint,
    pub(crate) exp: i64,
    pub(crate) digits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Round `mag * 2^exp` to `bits` significant bits, half-to-even.
/// `sticky` records that nonzero bits were already discarded below `mag`.
pub(crate) fn round_mag(mag: BigUint, exp: i64, bits: u64, sticky: bool) -> (BigUint, i64) {
    if mag.is_zero() {
        return (mag, 0);
    }
    let b = mag.bits();
    if b <= bits {
        // sticky bits below an exact-width mantissa cannot reach the half point
        let s = bits - b;
        return (mag << s, exp - s as i64);
    }
    let s = b - bits;
    let mut q = &mag >> s;
    if mag.bit(s - 1) {
        let below_half = sticky || mag.trailing_zeros().is_some_and(|tz| tz < s - 1);
        if below_half || q.bit(0) {
            q += 1u32;
        }
    }
    let mut e = exp + s as i64;
    if q.bits() > bits {
        q >>= 1u32;
        e += 1;
    }
    (q, e)
}

/// Correctly rounded quotient `num / den * 2^exp` at `bits` bits.
pub(crate) fn div_mag(num: &BigUint, den: &BigUint, exp: i64, bits: u64) -> (BigUint, i64) {
    let shift = (bits + 2 + den.bits()).saturating_sub(num.bits());
    let scaled = num << shift;
    let q = &scaled / den;
    let sticky = !(&q * den == scaled);
    round_mag(q, exp - shift as i64, bits, sticky)
}

impl HPReal {
    pub fn zero(digits: u32) -> Self {
        Self {
            neg: false,
            mag: BigUint::zero(),
            exp: 0,
            digits,
        }
    }

    pub(crate) fn from_parts(neg: bool, mag: BigUint, exp: i64, digits: u32, sticky: bool) -> Self {
        let (mag, exp) = round_mag(mag, exp, bits_for_digits(digits), sticky);
        let neg = neg && !mag.is_zero();
        Self {
            neg,
            mag,
            exp,
            digits,
        }
    }

    pub fn from_i64(v: i64, digits: u32) -> Self {
        Self::from_parts(v < 0, BigUint::from(v.unsigned_abs()), 0, digits, false)
    }

    pub fn from_u64(v: u64, digits: u32) -> Self {
        Self::from_parts(false, BigUint::from(v), 0, digits, false)
    }

    /// `num / den` correctly rounded.
    pub fn from_ratio(num: i64, den: i64, digits: u32) -> Self {
        assert!(den != 0, "HPReal::from_ratio with zero denominator");
        Self::from_i64(num, digits) / Self::from_i64(den, digits)
    }

    /// Exact conversion (then rounded if `digits` carries fewer than 53 bits,
    /// which cannot happen for valid precisions).
    ///
    /// Panics on NaN or infinity; see [`HPReal::try_from_f64`].
    pub fn from_f64(x: f64, digits: u32) -> Self {
        match Self::try_from_f64(x, digits) {
            Ok(v) => v,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn try_from_f64(x: f64, digits: u32) -> Result<Self, HpError> {
        if !x.is_finite() {
            return Err(HpError::NonFinite(x));
        }
        if x == 0.0 {
            return Ok(Self::zero(digits));
        }
        let bits = x.abs().to_bits();
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        Ok(Self::from_parts(
            x < 0.0,
            BigUint::from(m),
            e,
            digits,
            false,
        ))
    }

    /// Nearest `f64`; saturates to infinity or zero outside the `f64` range.
    pub fn to_f64(&self) -> f64 {
        if self.mag.is_zero() {
            return 0.0;
        }
        let (q, e) = round_mag(self.mag.clone(), self.exp, 53, false);
        let m = q.to_u64().expect("53-bit mantissa") as f64;
        let top = e + 53;
        let v = if top > 1025 {
            f64::INFINITY
        } else if top < -1100 {
            0.0
        } else {
            // split the scaling so intermediate powers stay finite
            let half = e / 2;
            m * 2f64.powi(half as i32) * 2f64.powi((e - half) as i32)
        };
        if self.neg {
            -v
        } else {
            v
        }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn config(&self) -> PrecisionConfig {
        PrecisionConfig {
            digits: self.digits,
        }
    }

    pub fn bits(&self) -> u64 {
        bits_for_digits(self.digits)
    }

    /// Same value re-rounded (or exactly extended) to another precision.
    pub fn with_digits(&self, digits: u32) -> Self {
        if digits == self.digits {
            return self.clone();
        }
        Self::from_parts(self.neg, self.mag.clone(), self.exp, digits, false)
    }

    pub fn is_zero(&self) -> bool {
        self.mag.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.neg
    }

    pub fn abs(&self) -> Self {
        let mut r = self.clone();
        r.neg = false;
        r
    }

    /// One unit in the last place of this value's mantissa.
    pub fn ulp(&self) -> Self {
        if self.mag.is_zero() {
            return Self::from_parts(
                false,
                BigUint::one(),
                -(self.bits() as i64),
                self.digits,
                false,
            );
        }
        Self::from_parts(false, BigUint::one(), self.exp, self.digits, false)
    }

    /// Unit roundoff 2^(1-bits) relative to 1.
    pub fn epsilon(digits: u32) -> Self {
        Self::from_parts(
            false,
            BigUint::one(),
            1 - bits_for_digits(digits) as i64,
            digits,
            false,
        )
    }

    /// Position of the bit just above the leading one: |x| in [2^(top-1), 2^top).
    pub(crate) fn top(&self) -> i64 {
        self.exp + self.mag.bits() as i64
    }

    /// Multiply by 2^k exactly.
    pub fn mul_pow2(&self, k: i64) -> Self {
        let mut r = self.clone();
        if !r.mag.is_zero() {
            r.exp += k;
        }
        r
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, HpError> {
        if rhs.mag.is_zero() {
            return Err(HpError::DivisionByZero);
        }
        let digits = self.digits.max(rhs.digits);
        if self.mag.is_zero() {
            return Ok(Self::zero(digits));
        }
        let (mag, exp) = div_mag(
            &self.mag,
            &rhs.mag,
            self.exp - rhs.exp,
            bits_for_digits(digits),
        );
        Ok(Self {
            neg: self.neg != rhs.neg,
            mag,
            exp,
            digits,
        })
    }

    /// The four basic operations with domain errors reported instead of panicking.
    pub fn arith(a: &Self, b: &Self, op: ArithOp) -> Result<Self, HpError> {
        Ok(match op {
            ArithOp::Add => add_ref(a, b, false),
            ArithOp::Sub => add_ref(a, b, true),
            ArithOp::Mul => mul_ref(a, b),
            ArithOp::Div => a.checked_div(b)?,
        })
    }

    pub fn powi(&self, n: i32) -> Self {
        let mut base = if n < 0 {
            Self::from_i64(1, self.digits) / self.clone()
        } else {
            self.clone()
        };
        let mut k = n.unsigned_abs();
        let mut acc = Self::from_i64(1, self.digits);
        while k > 0 {
            if k & 1 == 1 {
                acc = mul_ref(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = mul_ref(&base, &base);
            }
        }
        acc
    }

    fn cmp_mag(&self, other: &Self) -> Ordering {
        match (self.mag.is_zero(), other.mag.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.top().cmp(&other.top()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let e = self.exp.min(other.exp);
        let a = &self.mag << (self.exp - e) as u64;
        let b = &other.mag << (other.exp - e) as u64;
        a.cmp(&b)
    }
}

fn add_ref(a: &HPReal, b: &HPReal, negate_b: bool) -> HPReal {
    let digits = a.digits.max(b.digits);
    let b_neg = b.neg != negate_b;
    if b.mag.is_zero() {
        return a.with_digits(digits);
    }
    if a.mag.is_zero() {
        let mut r = b.with_digits(digits);
        r.neg = b_neg;
        return r;
    }
    let bits = bits_for_digits(digits) as i64;
    let (ta, tb) = (a.top(), b.top());
    // an addend entirely below half an ulp of the other only matters as a sticky bit
    if ta - tb > bits + 2 {
        return nudge(a, b_neg, digits);
    }
    if tb - ta > bits + 2 {
        let mut bb = b.clone();
        bb.neg = b_neg;
        return nudge(&bb, a.neg, digits);
    }
    let e = a.exp.min(b.exp);
    let ma = &a.mag << (a.exp - e) as u64;
    let mb = &b.mag << (b.exp - e) as u64;
    if a.neg == b_neg {
        HPReal::from_parts(a.neg, ma + mb, e, digits, false)
    } else {
        match ma.cmp(&mb) {
            Ordering::Equal => HPReal::zero(digits),
            Ordering::Greater => HPReal::from_parts(a.neg, ma - mb, e, digits, false),
            Ordering::Less => HPReal::from_parts(b_neg, mb - ma, e, digits, false),
        }
    }
}

/// `big` plus a nonzero value far below its last place (sign `small_neg`).
fn nudge(big: &HPReal, small_neg: bool, digits: u32) -> HPReal {
    // two extra bits below the mantissa keep the half-ulp decision exact
    let m = &big.mag << 2u32;
    let m = if small_neg == big.neg {
        m + 1u32
    } else {
        m - 1u32
    };
    HPReal::from_parts(big.neg, m, big.exp - 2, digits, true)
}

fn mul_ref(a: &HPReal, b: &HPReal) -> HPReal {
    let digits = a.digits.max(b.digits);
    if a.mag.is_zero() || b.mag.is_zero() {
        return HPReal::zero(digits);
    }
    HPReal::from_parts(
        a.neg != b.neg,
        &a.mag * &b.mag,
        a.exp + b.exp,
        digits,
        false,
    )
}

impl PartialEq for HPReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HPReal {}

impl PartialOrd for HPReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HPReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.neg, other.neg) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_mag(other),
            (true, true) => other.cmp_mag(self),
        }
    }
}

impl Neg for HPReal {
    type Output = HPReal;
    fn neg(mut self) -> HPReal {
        if !self.mag.is_zero() {
            self.neg = !self.neg;
        }
        self
    }
}

impl Neg for &HPReal {
    type Output = HPReal;
    fn neg(self) -> HPReal {
        -self.clone()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, |$a:ident, $b:ident| $body:expr) => {
        impl $tr<&HPReal> for &HPReal {
            type Output = HPReal;
            fn $m(self, rhs: &HPReal) -> HPReal {
                let ($a, $b) = (self, rhs);
                $body
            }
        }
        impl $tr<HPReal> for HPReal {
            type Output = HPReal;
            fn $m(self, rhs: HPReal) -> HPReal {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&HPReal> for HPReal {
            type Output = HPReal;
            fn $m(self, rhs: &HPReal) -> HPReal {
                (&self).$m(rhs)
            }
        }
        impl $tr<HPReal> for &HPReal {
            type Output = HPReal;
            fn $m(self, rhs: HPReal) -> HPReal {
                self.$m(&rhs)
            }
        }
        impl $atr<HPReal> for HPReal {
            fn $am(&mut self, rhs: HPReal) {
                *self = (&*self).$m(&rhs);
            }
        }
        impl $atr<&HPReal> for HPReal {
            fn $am(&mut self, rhs: &HPReal) {
                *self = (&*self).$m(rhs);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, |a, b| add_ref(a, b, false));
binop!(Sub, sub, SubAssign, sub_assign, |a, b| add_ref(a, b, true));
binop!(Mul, mul, MulAssign, mul_assign, |a, b| mul_ref(a, b));
// Division by zero panics through the operator; use `checked_div` to recover.
binop!(
    Div,
    div,
    DivAssign,
    div_assign,
    |a, b| match a.checked_div(b) {
        Ok(v) => v,
        Err(e) => panic!("HPReal: {e}"),
    }
);

impl fmt::Debug for HPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "HPReal({}, digits={})",
            self.to_sci_string(),
            self.digits
        )
    }
}

impl fmt::Display for HPReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci_string())
    }
}
