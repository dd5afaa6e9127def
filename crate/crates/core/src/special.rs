//! Lambert W (real branches 0 and -1) and the real dilogarithm.
//!
//! Everything is generic over [`Real`], so the same code serves `f64` scans
//! and extended-precision transfers.

use hpreal::Real;

use crate::error::{BvpError, Result};

/// Real branch of the Lambert W function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WBranch {
    /// W₀, defined on [-1/e, ∞), values ≥ -1.
    Principal,
    /// W₋₁, defined on [-1/e, 0), values ≤ -1.
    Lower,
}

const MAX_ITER: usize = 100;

/// `v - 1 - ln v` for `v > 0`, without cancellation near `v = 1`.
///
/// This is `-f(1 - v)` for `f(z) = z + ln(1 - z)`, the function that appears
/// in the first integral of the layer equation.
pub fn log_excess<T: Real>(v: &T) -> T {
    let one = v.one_like();
    let r = v.clone() - one.clone();
    if r.abs() > v.lift(0.5) {
        return r - v.ln();
    }
    // ln(1+r) = 2 atanh(t), t = r/(2+r), and r - 2t = r^2/(2+r)
    let two = v.lift(2.0);
    let denom = two.clone() + r.clone();
    let t = r.clone() / denom.clone();
    let t2 = t.square();
    let eps = v.epsilon_like();
    let mut term = t.clone() * t2.clone();
    let mut series = v.zero_like();
    let mut k = 3i64;
    // |t| <= 1/3, so a few hundred terms reach any supported precision
    while k < 1000 {
        let add = term.clone() / v.lift(k as f64);
        series += add.clone();
        if !(add.abs() > eps.clone() * series.abs()) || term.is_zero_value() {
            break;
        }
        term *= t2.clone();
        k += 2;
    }
    r.square() / denom - two * series
}

/// `z + ln(1 - z)` for `z < 1`, accurate near `z = 0`.
pub fn f_slope<T: Real>(z: &T) -> T {
    -log_excess(&(z.one_like() - z.clone()))
}

/// W(x) on the requested branch.
pub fn lambert_w<T: Real>(x: &T, branch: WBranch) -> Result<T> {
    let xf = x.to_f64();
    let domain = || BvpError::Domain {
        what: "lambert_w",
        value: xf,
    };
    if !x.is_finite_value() {
        return Err(domain());
    }
    let zero = x.zero_like();
    match branch {
        WBranch::Principal if *x >= x.lift(-0.25) => Ok(w0_direct(x)),
        WBranch::Lower if *x >= zero => Err(domain()),
        _ => {
            // x = -exp(-1 - s)
            let s = -x.one_like() - (-x.clone()).ln();
            let slack = x.lift(16.0) * x.epsilon_like();
            if s < -slack {
                return Err(domain());
            }
            lambert_w_exp(&s.max_of(zero), branch)
        }
    }
}

/// W(-exp(-1 - s)) for `s >= 0`.
///
/// Parametrising the argument by its distance `s` from the branch point keeps
/// full relative accuracy both near -1/e and for arguments that underflow.
/// With `v = -W` this solves `v - 1 - ln v = s`.
pub fn lambert_w_exp<T: Real>(s: &T, branch: WBranch) -> Result<T> {
    if !s.is_finite_value() || *s < s.zero_like() {
        return Err(BvpError::Domain {
            what: "lambert_w_exp",
            value: s.to_f64(),
        });
    }
    let one = s.one_like();
    if s.is_zero_value() {
        return Ok(-one);
    }
    let sf = s.to_f64();
    let mut v = if sf < 1.2 {
        let q = (s.lift(2.0) * s.clone()).sqrt();
        let q2 = q.square() / s.lift(3.0);
        let q3 = q.clone() * q.square() / s.lift(36.0);
        match branch {
            WBranch::Principal => one.clone() - q + q2 - q3,
            WBranch::Lower => one.clone() + q + q2 + q3,
        }
    } else {
        match branch {
            WBranch::Principal => {
                let v0 = (-one.clone() - s.clone()).exp();
                (v0 - one.clone() - s.clone()).exp()
            }
            WBranch::Lower => {
                let a = one.clone() + s.clone();
                a.clone() + (a.clone() + a.ln()).ln()
            }
        }
    };
    let tol = s.lift(4.0) * s.epsilon_like();
    for _ in 0..MAX_ITER {
        let psi = log_excess(&v) - s.clone();
        let dpsi = (v.clone() - one.clone()) / v.clone();
        if dpsi.is_zero_value() {
            break;
        }
        // Halley; psi''/psi'^2 = 1/(v-1)^2 cannot overflow for tiny v
        let newton = psi.clone() / dpsi;
        let corr = one.clone() - psi / (s.lift(2.0) * (v.clone() - one.clone()).square());
        let mut step = newton / corr;
        // stay on the branch's side of v = 1
        let next = v.clone() - step.clone();
        match branch {
            WBranch::Principal if next <= s.zero_like() => step = v.clone() * s.lift(0.5),
            WBranch::Principal if next > one => step = (v.clone() - one.clone()) * s.lift(0.5),
            WBranch::Lower if next < one => step = (v.clone() - one.clone()) * s.lift(0.5),
            _ => {}
        }
        v -= step.clone();
        if step.abs() <= tol.clone() * v.abs() {
            break;
        }
    }
    Ok(-v)
}

/// Principal branch for x ≥ -1/4, iterating on w e^w = x directly so tiny
/// arguments keep their relative accuracy.
fn w0_direct<T: Real>(x: &T) -> T {
    if x.is_zero_value() {
        return x.zero_like();
    }
    let one = x.one_like();
    let xf = x.to_f64();
    let tol = x.lift(4.0) * x.epsilon_like();
    if xf > 3.0 {
        // Newton on w + ln w = ln x avoids overflowing e^w
        let lx = x.ln();
        let mut w = lx.clone() - lx.ln() + lx.ln() / lx.clone();
        for _ in 0..MAX_ITER {
            let g = w.clone() + w.ln() - lx.clone();
            let step = g / (one.clone() + one.clone() / w.clone());
            w -= step.clone();
            if step.abs() <= tol.clone() * w.abs() {
                break;
            }
        }
        return w;
    }
    let mut w = if xf.abs() <= 0.25 {
        let x2 = x.square();
        x.clone() - x2.clone() + x.lift(1.5) * x2.clone() * x.clone() - x.ratio(8, 3) * x2.square()
    } else {
        let l = x.ln_1p();
        l.clone() * (one.clone() - l.ln_1p() / (x.lift(2.0) + l))
    };
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w.clone() * ew.clone() - x.clone();
        let wp1 = w.clone() + one.clone();
        let denom = ew * wp1.clone() - (w.clone() + x.lift(2.0)) * f.clone() / (x.lift(2.0) * wp1);
        let step = f / denom;
        w -= step.clone();
        if step.abs() <= tol.clone() * w.abs() {
            break;
        }
    }
    w
}

/// Real dilogarithm Li₂(x) = Σ x^k / k² for x ≤ 1.
pub fn dilog<T: Real>(x: &T) -> Result<T> {
    let one = x.one_like();
    if !x.is_finite_value() || *x > one {
        return Err(BvpError::Domain {
            what: "dilog",
            value: x.to_f64(),
        });
    }
    let pi2_6 = x.pi_like().square() / x.lift(6.0);
    if *x == one {
        return Ok(pi2_6);
    }
    let half = x.lift(0.5);
    if *x > half {
        // reflection
        let y = one.clone() - x.clone();
        return Ok(pi2_6 - x.ln() * y.ln() - dilog_series(&y));
    }
    if *x >= -half.clone() {
        return Ok(dilog_series(x));
    }
    if *x >= -one.clone() {
        // Landen: x/(x-1) lies in (1/3, 1/2]
        let y = x.clone() / (x.clone() - one.clone());
        let l = (one - x.clone()).ln();
        return Ok(-dilog_series(&y) - half * l.square());
    }
    // inversion maps (-inf, -1) onto (-1, 0)
    let l = (-x.clone()).ln();
    let inner = dilog(&(one / x.clone()))?;
    Ok(-pi2_6 - half * l.square() - inner)
}

fn dilog_series<T: Real>(x: &T) -> T {
    let eps = x.epsilon_like();
    let mut sum = x.clone();
    let mut pow = x.clone();
    let mut k = 2i64;
    // |x| <= 1/2
    while k < 1000 {
        pow *= x.clone();
        let term = pow.clone() / x.lift((k * k) as f64);
        sum += term.clone();
        if !(term.abs() > eps.clone() * sum.abs()) || pow.is_zero_value() {
            break;
        }
        k += 1;
    }
    sum
}

/// Li₂(-e^t) for any real t, without overflowing e^t.
pub fn dilog_neg_exp<T: Real>(t: &T) -> T {
    if *t <= t.zero_like() {
        return dilog(&-t.exp()).expect("argument is in [-1, 0)");
    }
    let pi2_6 = t.pi_like().square() / t.lift(6.0);
    let inv = dilog(&-(-t.clone()).exp()).expect("argument is in [-1, 0)");
    -pi2_6 - t.square() * t.lift(0.5) - inv
}

/// ln(1 + e^t), stable for large |t|.
pub fn softplus<T: Real>(t: &T) -> T {
    if *t > t.zero_like() {
        t.clone() + (-t.clone()).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// ln cosh t = |t| + ln(1 + e^{-2|t|}) - ln 2.
pub fn log_cosh<T: Real>(t: &T) -> T {
    let a = t.abs();
    let ln2 = t.lift(2.0).ln();
    a.clone() + (t.lift(-2.0) * a).exp().ln_1p() - ln2
}
