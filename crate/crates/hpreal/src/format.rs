use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Pow, ToPrimitive, Zero};

use crate::error::HpError;
use crate::hp::{bits_for_digits, div_mag, round_mag, HPReal, PrecisionConfig};

fn pow10(k: u64) -> BigUint {
    BigUint::from(10u32).pow(k)
}

impl HPReal {
    /// Parse `[+-]digits[.digits][(e|E)[+-]digits]`, correctly rounded.
    pub fn parse(s: &str, digits: u32) -> Result<Self, HpError> {
        let err = || HpError::Parse(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (mantissa, exp10) = match body.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = body[i + 1..].parse().map_err(|_| err())?;
                (&body[..i], e)
            }
            None => (body, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part
            .bytes()
            .chain(frac_part.bytes())
            .all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let all: String = [int_part, frac_part].concat();
        let d = if all.is_empty() {
            BigUint::zero()
        } else {
            BigUint::parse_bytes(all.as_bytes(), 10).ok_or_else(err)?
        };
        if d.is_zero() {
            return Ok(Self::zero(digits));
        }
        let e10 = exp10 - frac_part.len() as i64;
        let bits = bits_for_digits(digits);
        let (mag, exp) = if e10 >= 0 {
            round_mag(d * pow10(e10 as u64), 0, bits, false)
        } else {
            div_mag(&d, &pow10(e10.unsigned_abs()), 0, bits)
        };
        Ok(Self {
            neg,
            mag,
            exp,
            digits,
        })
    }

    /// Scientific notation with exactly `digits` significant digits,
    /// e.g. `3.33…3e-1`. Zero prints as `0`.
    pub fn to_sci_string(&self) -> String {
        self.to_sci_string_with(self.digits)
    }

    pub fn to_sci_string_with(&self, sig: u32) -> String {
        if self.mag.is_zero() {
            return "0".to_string();
        }
        let sig = sig.max(1);
        let mut k = self.log10_estimate();
        let lower = pow10(u64::from(sig) - 1);
        let upper = pow10(u64::from(sig));
        let n = loop {
            let n = self.scaled_integer(i64::from(sig) - 1 - k);
            if n >= upper {
                k += 1;
            } else if n < lower {
                k -= 1;
            } else {
                break n;
            }
        };
        let ds = n.to_str_radix(10);
        let mut out = String::with_capacity(ds.len() + 8);
        if self.neg {
            out.push('-');
        }
        out.push_str(&ds[..1]);
        if ds.len() > 1 {
            out.push('.');
            out.push_str(&ds[1..]);
        }
        out.push('e');
        out.push_str(&k.to_string());
        out
    }

    fn log10_estimate(&self) -> i64 {
        let (q, e) = round_mag(self.mag.clone(), self.exp, 53, false);
        let m = q.to_u64().unwrap_or(1) as f64 / (1u64 << 52) as f64;
        let top = e + 52;
        (m.log10() + top as f64 * std::f64::consts::LOG10_2).floor() as i64
    }

    /// round-half-even(|self| * 10^t) as an integer
    fn scaled_integer(&self, t: i64) -> BigUint {
        let mut num = self.mag.clone();
        let mut den = BigUint::one();
        if self.exp >= 0 {
            num <<= self.exp as u64;
        } else {
            den <<= self.exp.unsigned_abs();
        }
        if t >= 0 {
            num *= pow10(t as u64);
        } else {
            den *= pow10(t.unsigned_abs());
        }
        let q = &num / &den;
        let r = num - &q * &den;
        let twice = r << 1u32;
        if twice > den || (twice == den && q.bit(0)) {
            q + 1u32
        } else {
            q
        }
    }
}

impl FromStr for HPReal {
    type Err = HpError;

    /// Parses at the default working precision.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HPReal::parse(s, PrecisionConfig::DEFAULT_DIGITS)
    }
}
