//! Bracketed scalar root finding.

use hpreal::Real;

use crate::error::{BvpError, Result};

/// Brent's method (inverse quadratic interpolation with bisection fallback).
///
/// `f(a)` and `f(b)` must differ in sign (a zero at either end is accepted).
/// Stops when the bracket is narrower than `2 * (4 eps |x| + xtol)` or the
/// function vanishes. Returns the best abscissa found.
pub fn brent<T, F>(mut f: F, a: T, b: T, xtol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(&T) -> T,
{
    let fa = f(&a);
    let fb = f(&b);
    brent_with_values(&mut f, a, fa, b, fb, xtol, max_iter)
}

/// Brent's method when the endpoint values are already known.
pub fn brent_with_values<T, F>(
    f: &mut F,
    a: T,
    fa: T,
    b: T,
    fb: T,
    xtol: T,
    max_iter: usize,
) -> Result<T>
where
    T: Real,
    F: FnMut(&T) -> T,
{
    let zero = a.zero_like();
    let (mut a, mut fa, mut b, mut fb) = (a, fa, b, fb);
    if fa.is_zero_value() {
        return Ok(a);
    }
    if fb.is_zero_value() {
        return Ok(b);
    }
    if (fa > zero) == (fb > zero) {
        return Err(BvpError::NotBracketed {
            a: a.to_f64(),
            b: b.to_f64(),
        });
    }
    let eps = a.epsilon_like();
    let half = a.lift(0.5);
    let two = a.lift(2.0);
    let three = a.lift(3.0);

    let mut c = a.clone();
    let mut fc = fa.clone();
    let mut d = b.clone() - a.clone();
    let mut e = d.clone();
    for _ in 0..max_iter {
        if (fb > zero) == (fc > zero) {
            c = a.clone();
            fc = fa.clone();
            d = b.clone() - a.clone();
            e = d.clone();
        }
        if fc.abs() < fb.abs() {
            a = b.clone();
            b = c.clone();
            c = a.clone();
            fa = fb.clone();
            fb = fc.clone();
            fc = fa.clone();
        }
        let tol = two.clone() * eps.clone() * b.abs() + half.clone() * xtol.clone();
        let m = half.clone() * (c.clone() - b.clone());
        if m.abs() <= tol || fb.is_zero_value() {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb.clone() / fa.clone();
            let (mut p, mut q);
            if a == c {
                p = two.clone() * m.clone() * s.clone();
                q = a.one_like() - s;
            } else {
                let qa = fa.clone() / fc.clone();
                let r = fb.clone() / fc.clone();
                p = s.clone()
                    * (two.clone() * m.clone() * qa.clone() * (qa.clone() - r.clone())
                        - (b.clone() - a.clone()) * (r.clone() - a.one_like()));
                q = (qa - a.one_like()) * (r - a.one_like()) * (s - a.one_like());
            }
            if p > zero {
                q = -q;
            } else {
                p = -p;
            }
            let lim1 = three.clone() * m.clone() * q.clone() - (tol.clone() * q.clone()).abs();
            let lim2 = (e.clone() * q.clone()).abs();
            if two.clone() * p.clone() < lim1.min_of(lim2) {
                e = d;
                d = p / q;
            } else {
                d = m.clone();
                e = m.clone();
            }
        } else {
            d = m.clone();
            e = m.clone();
        }
        a = b.clone();
        fa = fb.clone();
        if d.abs() > tol {
            b += d.clone();
        } else if m > zero {
            b += tol;
        } else {
            b -= tol;
        }
        fb = f(&b);
    }
    Ok(b)
}

/// Sign changes of a sampled function, as index pairs `(i, i + 1)`.
pub fn sign_changes(values: &[f64]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].is_finite() && w[1].is_finite() && (w[0] > 0.0) != (w[1] > 0.0))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hpreal::HPReal;

    #[test]
    fn finds_cube_root_of_two() {
        let r = brent(|x: &f64| x * x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn rejects_unbracketed() {
        assert!(matches!(
            brent(|x: &f64| x * x + 1.0, -1.0, 1.0, 1e-12, 50),
            Err(BvpError::NotBracketed { .. })
        ));
    }

    #[test]
    fn works_in_extended_precision() {
        let lo = HPReal::from_i64(1, 40);
        let hi = HPReal::from_i64(2, 40);
        let tol = HPReal::parse("1e-38", 40).unwrap();
        let r = brent(
            |x: &HPReal| x.clone() * x.clone() - HPReal::from_i64(2, 40),
            lo,
            hi,
            tol,
            200,
        )
        .unwrap();
        let err = (r - HPReal::from_i64(2, 40).sqrt()).abs();
        assert!(err.to_f64() < 1e-37);
    }

    #[test]
    fn sign_change_indices() {
        assert_eq!(sign_changes(&[1.0, -1.0, -2.0, 3.0, 4.0]), vec![0, 2]);
    }
}
