//! Elementary functions for [`HPReal`].
//!
//! Every public function lifts its argument to `digits + GUARD` decimal
//! digits, evaluates a Taylor/atanh-series kernel after argument reduction,
//! and rounds back to the caller's precision.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::HpError;
use crate::hp::HPReal;

const GUARD: u32 = 12;

/// Selector for [`HPReal::elem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElemFn {
    Exp,
    Log,
    Sqrt,
    Tanh,
    Sinh,
    Cosh,
    Sech,
    Atanh,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Constant {
    Ln2,
    Pi,
}

thread_local! {
    static CONSTANTS: RefCell<HashMap<(Constant, u32), HPReal>> = RefCell::new(HashMap::new());
}

fn cached(c: Constant, digits: u32, compute: impl FnOnce(u32) -> HPReal) -> HPReal {
    if let Some(v) = CONSTANTS.with(|m| m.borrow().get(&(c, digits)).cloned()) {
        return v;
    }
    let v = compute(digits);
    CONSTANTS.with(|m| m.borrow_mut().insert((c, digits), v.clone()));
    v
}

fn int(v: i64, digits: u32) -> HPReal {
    HPReal::from_i64(v, digits)
}

/// True once `term` no longer changes `sum` at its precision.
fn negligible(term: &HPReal, sum: &HPReal) -> bool {
    term.is_zero() || (!sum.is_zero() && term.top() < sum.top() - sum.bits() as i64 - 2)
}

/// atanh(t) = t + t^3/3 + t^5/5 + ..., for |t| <= 1/3.
fn atanh_series(t: &HPReal) -> HPReal {
    let t2 = t * t;
    let mut power = t.clone();
    let mut sum = t.clone();
    let mut n = 1i64;
    loop {
        power = &power * &t2;
        let term = &power / int(2 * n + 1, t.digits);
        if negligible(&term, &sum) {
            break;
        }
        sum += term;
        n += 1;
    }
    sum
}

/// atan(1/q) for an integer q >= 2.
fn atan_inv(q: i64, digits: u32) -> HPReal {
    let x = HPReal::from_ratio(1, q, digits);
    let x2 = &x * &x;
    let mut power = x.clone();
    let mut sum = x;
    let mut n = 1i64;
    loop {
        power = &power * &x2;
        let term = &power / int(2 * n + 1, digits);
        if negligible(&term, &sum) {
            break;
        }
        if n % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        n += 1;
    }
    sum
}

fn ln2_at(digits: u32) -> HPReal {
    cached(Constant::Ln2, digits, |d| {
        let w = d + GUARD;
        (atanh_series(&HPReal::from_ratio(1, 3, w)) * int(2, w)).with_digits(d)
    })
}

fn pi_at(digits: u32) -> HPReal {
    cached(Constant::Pi, digits, |d| {
        let w = d + GUARD;
        // Machin: pi = 16 atan(1/5) - 4 atan(1/239)
        (atan_inv(5, w) * int(16, w) - atan_inv(239, w) * int(4, w)).with_digits(d)
    })
}

/// e^x at the precision of `x` (callers supply guard digits).
fn exp_kernel(x: &HPReal) -> HPReal {
    let d = x.digits;
    if x.is_zero() {
        return int(1, d);
    }
    let xf = x.to_f64();
    assert!(
        xf.abs() < 1e15,
        "HPReal::exp argument {xf:e} overflows the exponent range"
    );
    let k = (xf / std::f64::consts::LN_2).round() as i64;
    // extra digits in ln 2 absorb the growth of k*ln2
    let r = if k == 0 {
        x.clone()
    } else {
        let wide = d + 18;
        (x.with_digits(wide) - ln2_at(wide) * int(k, wide)).with_digits(d)
    };
    let halvings = 8i64;
    let r = r.mul_pow2(-halvings);
    let mut term = int(1, d);
    let mut sum = int(1, d);
    let mut n = 1i64;
    loop {
        term = &term * &r / int(n, d);
        if negligible(&term, &sum) {
            break;
        }
        sum += &term;
        n += 1;
    }
    for _ in 0..halvings {
        sum = &sum * &sum;
    }
    sum.mul_pow2(k)
}

/// e^x - 1 without cancellation for small |x|.
fn exp_m1_kernel(x: &HPReal) -> HPReal {
    let d = x.digits;
    if x.abs() > HPReal::from_ratio(1, 2, d) {
        return exp_kernel(x) - int(1, d);
    }
    let mut term = x.clone();
    let mut sum = x.clone();
    let mut n = 2i64;
    loop {
        term = &term * x / int(n, d);
        if negligible(&term, &sum) {
            break;
        }
        sum += &term;
        n += 1;
    }
    sum
}

/// ln(x) for x > 0.
fn ln_kernel(x: &HPReal) -> HPReal {
    let d = x.digits;
    // x = f * 2^e with f in [2/3, 4/3)
    let bits = x.mag.bits() as i64;
    let mut e = x.exp + bits - 1;
    let mut f = HPReal {
        neg: false,
        mag: x.mag.clone(),
        exp: 1 - bits,
        digits: d,
    };
    if f > HPReal::from_ratio(4, 3, d) {
        f = f.mul_pow2(-1);
        e += 1;
    }
    let one = int(1, d);
    let t = (&f - &one) / (&f + &one);
    let lnf = atanh_series(&t).mul_pow2(1);
    if e == 0 {
        return lnf;
    }
    let wide = d + 20;
    (lnf.with_digits(wide) + ln2_at(wide) * int(e, wide)).with_digits(d)
}

fn ln_1p_kernel(x: &HPReal) -> HPReal {
    let d = x.digits;
    let half = HPReal::from_ratio(1, 2, d);
    if x.abs() < half {
        // ln(1+x) = 2 atanh(x/(2+x)), |x/(2+x)| < 1/3
        let t = x / (int(2, d) + x);
        return atanh_series(&t).mul_pow2(1);
    }
    ln_kernel(&(int(1, d) + x))
}

fn sqrt_exact(x: &HPReal) -> HPReal {
    let bits = x.bits();
    if x.is_zero() {
        return HPReal::zero(x.digits);
    }
    let mut mag = x.mag.clone();
    let mut exp = x.exp;
    if exp.rem_euclid(2) != 0 {
        mag <<= 1u32;
        exp -= 1;
    }
    let want = 2 * (bits + 2);
    let mut shift = want.saturating_sub(mag.bits());
    if shift % 2 == 1 {
        shift += 1;
    }
    let scaled = mag << shift;
    let root = scaled.sqrt();
    let sticky = &root * &root != scaled;
    let root_exp = (exp - shift as i64) / 2;
    let (m, e) = crate::hp::round_mag(root, root_exp, bits, sticky);
    HPReal {
        neg: false,
        mag: m,
        exp: e,
        digits: x.digits,
    }
}

fn domain(function: &'static str, x: &HPReal) -> HpError {
    HpError::Domain {
        function,
        argument: x.to_sci_string(),
    }
}

impl HPReal {
    fn guarded(&self) -> HPReal {
        self.with_digits(self.digits + GUARD)
    }

    pub fn ln2(digits: u32) -> HPReal {
        ln2_at(digits)
    }

    pub fn pi(digits: u32) -> HPReal {
        pi_at(digits)
    }

    pub fn exp(&self) -> HPReal {
        exp_kernel(&self.guarded()).with_digits(self.digits)
    }

    pub fn exp_m1(&self) -> HPReal {
        exp_m1_kernel(&self.guarded()).with_digits(self.digits)
    }

    pub fn try_ln(&self) -> Result<HPReal, HpError> {
        if self.is_zero() || self.neg {
            return Err(domain("log", self));
        }
        Ok(ln_kernel(&self.guarded()).with_digits(self.digits))
    }

    /// Natural logarithm; panics for x <= 0 (see [`HPReal::try_ln`]).
    pub fn ln(&self) -> HPReal {
        self.try_ln().unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn try_ln_1p(&self) -> Result<HPReal, HpError> {
        if *self <= int(-1, self.digits) {
            return Err(domain("log1p", self));
        }
        Ok(ln_1p_kernel(&self.guarded()).with_digits(self.digits))
    }

    pub fn ln_1p(&self) -> HPReal {
        self.try_ln_1p().unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn try_sqrt(&self) -> Result<HPReal, HpError> {
        if self.neg {
            return Err(domain("sqrt", self));
        }
        Ok(sqrt_exact(self))
    }

    pub fn sqrt(&self) -> HPReal {
        self.try_sqrt().unwrap_or_else(|e| panic!("{e}"))
    }

    pub fn sinh(&self) -> HPReal {
        let x = self.guarded();
        let d = x.digits;
        let r = if x.abs() < HPReal::from_ratio(1, 2, d) {
            let x2 = &x * &x;
            let mut term = x.clone();
            let mut sum = x.clone();
            let mut n = 1i64;
            loop {
                term = &term * &x2 / int((2 * n) * (2 * n + 1), d);
                if negligible(&term, &sum) {
                    break;
                }
                sum += &term;
                n += 1;
            }
            sum
        } else {
            let e = exp_kernel(&x);
            (&e - int(1, d) / &e).mul_pow2(-1)
        };
        r.with_digits(self.digits)
    }

    pub fn cosh(&self) -> HPReal {
        let x = self.guarded();
        let e = exp_kernel(&x);
        (&e + int(1, x.digits) / &e)
            .mul_pow2(-1)
            .with_digits(self.digits)
    }

    pub fn tanh(&self) -> HPReal {
        let x = self.guarded();
        let d = x.digits;
        // beyond this point tanh rounds to +-1 at any supported precision
        if x.abs() > int(x.bits() as i64, d) {
            return int(if self.neg { -1 } else { 1 }, self.digits);
        }
        let em = exp_m1_kernel(&x.mul_pow2(1));
        (&em / (&em + int(2, d))).with_digits(self.digits)
    }

    pub fn sech(&self) -> HPReal {
        let x = self.guarded();
        let e = exp_kernel(&-x.abs());
        // sech x = 2 e^{-|x|} / (1 + e^{-2|x|})
        let d = x.digits;
        (e.mul_pow2(1) / (int(1, d) + &e * &e)).with_digits(self.digits)
    }

    pub fn try_atanh(&self) -> Result<HPReal, HpError> {
        let one = int(1, self.digits);
        if self.abs() >= one {
            return Err(domain("atanh", self));
        }
        let x = self.guarded();
        let d = x.digits;
        let r = if x.abs() <= HPReal::from_ratio(1, 3, d) {
            atanh_series(&x)
        } else {
            let one = int(1, d);
            ln_kernel(&((&one + &x) / (&one - &x))).mul_pow2(-1)
        };
        Ok(r.with_digits(self.digits))
    }

    pub fn atanh(&self) -> HPReal {
        self.try_atanh().unwrap_or_else(|e| panic!("{e}"))
    }

    /// Evaluate one of the supported elementary functions with domain checks.
    pub fn elem(&self, f: ElemFn) -> Result<HPReal, HpError> {
        match f {
            ElemFn::Exp => Ok(self.exp()),
            ElemFn::Log => self.try_ln(),
            ElemFn::Sqrt => self.try_sqrt(),
            ElemFn::Tanh => Ok(self.tanh()),
            ElemFn::Sinh => Ok(self.sinh()),
            ElemFn::Cosh => Ok(self.cosh()),
            ElemFn::Sech => Ok(self.sech()),
            ElemFn::Atanh => self.try_atanh(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp(s: &str) -> HPReal {
        HPReal::parse(s, 50).unwrap()
    }

    fn close(a: &HPReal, b: &HPReal, ulps: i64) -> bool {
        let tol = b.ulp() * HPReal::from_i64(ulps, b.digits);
        (a - b).abs() <= tol
    }

    #[test]
    fn constants_match_reference_digits() {
        assert_eq!(
            HPReal::pi(50).to_sci_string(),
            "3.1415926535897932384626433832795028841971693993751e0"
        );
        assert_eq!(
            HPReal::ln2(50).to_sci_string(),
            "6.9314718055994530941723212145817656807550013436026e-1"
        );
    }

    #[test]
    fn exp_values() {
        assert_eq!(hp("0").exp(), hp("1"));
        let e15 = hp("-15").exp();
        assert!(close(
            &e15,
            &hp("3.05902320501825788371479497702289639370820780818559116559262e-7"),
            2
        ));
        // cross-check by squaring e^-7.5
        let half = hp("-7.5").exp();
        assert!(close(&(&half * &half), &e15, 4));
        assert!(close(
            &hp("1").exp(),
            &hp("2.71828182845904523536028747135266249775724709369995957496697"),
            2
        ));
    }

    #[test]
    fn log_values_and_domain() {
        assert!(hp("1").ln().is_zero());
        assert!(close(
            &hp("10").ln(),
            &hp("2.30258509299404568401799145468436420760110148862877297603333"),
            2
        ));
        assert!(hp("0").try_ln().is_err());
        assert!(hp("-1").try_ln().is_err());
        assert!(hp("-1").try_ln_1p().is_err());
        let tiny = hp("1e-40");
        assert!(close(
            &tiny.ln_1p(),
            &hp("9.9999999999999999999999999999999999999995e-41"),
            2
        ));
    }

    #[test]
    fn sqrt_is_correctly_rounded() {
        assert_eq!(hp("4").sqrt(), hp("2"));
        assert!(close(
            &hp("2").sqrt(),
            &hp("1.41421356237309504880168872420969807856967187537694807317668"),
            1
        ));
        assert!(hp("-4").try_sqrt().is_err());
        assert!(hp("0").sqrt().is_zero());
    }

    #[test]
    fn hyperbolic_and_inverse() {
        let half = hp("0.5");
        assert!(close(&half.atanh().tanh(), &half, 4));
        assert!(hp("1").try_atanh().is_err());
        assert!(hp("-1.5").try_atanh().is_err());
        // atanh(1/2) = ln(3)/2
        let ln3 = hp("3").ln().mul_pow2(-1);
        assert!(close(&half.atanh(), &ln3, 2));
        assert_eq!(hp("400").tanh(), hp("1"));
        assert_eq!(hp("-400").tanh(), hp("-1"));
        let x = hp("0.3");
        assert!(close(&x.sech(), &(HPReal::from_i64(1, 50) / x.cosh()), 4));
        assert!(close(&hp("1e-30").sinh(), &hp("1e-30"), 1));
        assert!(close(&hp("1e-30").tanh(), &hp("1e-30"), 1));
    }

    #[test]
    fn elem_dispatch_reports_domain_errors() {
        assert!(hp("-2").elem(ElemFn::Log).is_err());
        assert!(hp("-2").elem(ElemFn::Sqrt).is_err());
        assert!(hp("2").elem(ElemFn::Atanh).is_err());
        assert_eq!(hp("0").elem(ElemFn::Exp).unwrap(), hp("1"));
        assert_eq!(hp("0").elem(ElemFn::Cosh).unwrap(), hp("1"));
        assert_eq!(hp("0").elem(ElemFn::Sech).unwrap(), hp("1"));
        assert!(hp("0").elem(ElemFn::Sinh).unwrap().is_zero());
    }
}
