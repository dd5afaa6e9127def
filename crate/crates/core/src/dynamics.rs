//! The phase-plane system y' = z, z' = y(z - 1)/ε, its first integral, its
//! reversing symmetry and its canonical (Hamiltonian) form.
//!
//! Slopes near 1 are where all the interesting behaviour lives, so besides
//! the plain `(y, z)` API most functions have a variant in the deficit
//! `w = 1 - z`, which keeps full relative precision when `z` rounds to 1.

use hpreal::Real;

use crate::error::{BvpError, Result};
use crate::special::{lambert_w_exp, log_excess, WBranch};

/// Problem parameters; only ε is physical.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    epsilon: T,
}

impl<T: Real> Params<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if !(epsilon > epsilon.zero_like()) || !epsilon.is_finite_value() {
            return Err(BvpError::BadEpsilon(epsilon.to_f64()));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> &T {
        &self.epsilon
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint<T> {
    pub y: T,
    pub z: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(y: T, z: T) -> Self {
        Self { y, z }
    }

    pub fn deficit(&self) -> T {
        self.z.one_like() - self.z.clone()
    }
}

/// The constant C² labelling a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedLabel<T> {
    pub c_squared: T,
}

/// Velocity `(y', z')` at `p`.
pub fn rhs<T: Real>(p: &PhasePoint<T>, params: &Params<T>) -> PhasePoint<T> {
    let zdot = p.y.clone() * (p.z.clone() - p.z.one_like()) / params.epsilon.clone();
    PhasePoint::new(p.z.clone(), zdot)
}

/// Velocity in deficit form: `y' = 1 - w`, `w' = y w / ε`.
pub fn rhs_deficit<T: Real>(y: &T, w: &T, eps: &T) -> (T, T) {
    (
        y.one_like() - w.clone(),
        y.clone() * w.clone() / eps.clone(),
    )
}

/// C² = y² - 2ε[z + ln(1 - z)].
pub fn conserved<T: Real>(p: &PhasePoint<T>, params: &Params<T>) -> Result<ConservedLabel<T>> {
    if !(p.z < p.z.one_like()) {
        return Err(BvpError::Domain {
            what: "conserved",
            value: p.z.to_f64(),
        });
    }
    Ok(ConservedLabel {
        c_squared: conserved_deficit(&p.y, &p.deficit(), params),
    })
}

/// C² from `(y, w)`, `w = 1 - z > 0`: y² + 2ε(w - 1 - ln w).
pub fn conserved_deficit<T: Real>(y: &T, w: &T, params: &Params<T>) -> T {
    y.square() + y.lift(2.0) * params.epsilon.clone() * log_excess(w)
}

/// The slope at height `y` on the trajectory labelled `label`.
///
/// `Principal` gives the crossing with `0 ≤ z < 1`, `Lower` the one with
/// `z ≤ 0`. `None` when the trajectory does not reach that height.
pub fn z_of_y<T: Real>(
    y: &T,
    label: &ConservedLabel<T>,
    params: &Params<T>,
    branch: WBranch,
) -> Option<T> {
    deficit_of_y(y, label, params, branch).map(|w| y.one_like() - w)
}

/// As [`z_of_y`], returning `w = 1 - z`.
pub fn deficit_of_y<T: Real>(
    y: &T,
    label: &ConservedLabel<T>,
    params: &Params<T>,
    branch: WBranch,
) -> Option<T> {
    // w - 1 - ln w = (C² - y²)/(2ε), i.e. z = 1 + W(-exp(-1 + (y² - C²)/2ε))
    let s = (label.c_squared.clone() - y.square()) / (y.lift(2.0) * params.epsilon.clone());
    if s < s.zero_like() {
        return None;
    }
    lambert_w_exp(&s, branch).ok().map(|w| -w)
}

/// The reversing symmetry in the phase plane: (y, z) -> (-y, z).
pub fn symmetry_map<T: Real>(p: &PhasePoint<T>) -> PhasePoint<T> {
    PhasePoint::new(-p.y.clone(), p.z.clone())
}

/// The same symmetry acting on solution curves: (x, y) -> (1 - x, -y).
pub fn curve_symmetry<T: Real>(x: &T, y: &T) -> (T, T) {
    (x.one_like() - x.clone(), -y.clone())
}

/// H(Q, P) = P - e^P - Q²/(2ε) with Q = y, P = ln(1 - z).
pub fn hamiltonian<T: Real>(p: &PhasePoint<T>, params: &Params<T>) -> Result<T> {
    if !(p.z < p.z.one_like()) {
        return Err(BvpError::Domain {
            what: "hamiltonian",
            value: p.z.to_f64(),
        });
    }
    let w = p.deficit();
    Ok(w.ln() - w - p.y.square() / (p.y.lift(2.0) * params.epsilon.clone()))
}

/// Canonical velocity `(Q', P') = (∂H/∂P, -∂H/∂Q) = (1 - e^P, Q/ε)`.
pub fn hamiltonian_velocity<T: Real>(q: &T, p: &T, params: &Params<T>) -> (T, T) {
    (q.one_like() - p.exp(), q.clone() / params.epsilon.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(y: f64, z: f64) -> PhasePoint<f64> {
        PhasePoint::new(y, z)
    }

    fn eps(e: f64) -> Params<f64> {
        Params::new(e).unwrap()
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(rhs(&pp(1.0, 0.0), &eps(0.1)), pp(0.0, -10.0));
        assert_eq!(rhs(&pp(0.0, -5.0), &eps(0.3)), pp(-5.0, 0.0));
        assert_eq!(rhs(&pp(1.0, 1.0), &eps(0.01)), pp(1.0, 0.0));
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(Params::new(0.0).is_err());
        assert!(Params::new(-1.0).is_err());
        assert!(Params::new(f64::NAN).is_err());
    }

    #[test]
    fn conserved_examples() {
        assert_eq!(conserved(&pp(1.0, 0.0), &eps(0.7)).unwrap().c_squared, 1.0);
        assert_eq!(conserved(&pp(0.0, 0.0), &eps(0.7)).unwrap().c_squared, 0.0);
        let z: f64 = -11.2274;
        let want = 1.0 - 0.2 * (z + (1.0 - z).ln());
        let got = conserved(&pp(1.0, z), &eps(0.1)).unwrap().c_squared;
        assert!((got - want).abs() < 1e-14);
        assert!(conserved(&pp(0.0, 1.0), &eps(0.1)).is_err());
    }

    #[test]
    fn z_of_y_examples() {
        let one = ConservedLabel { c_squared: 1.0 };
        assert_eq!(z_of_y(&1.0, &one, &eps(0.3), WBranch::Principal), Some(0.0));
        let ec = eps(0.215_986_928_890_290_05);
        let zc = z_of_y(&0.0, &one, &ec, WBranch::Lower).unwrap();
        assert!((zc + 3.905_263_770_3).abs() < 1e-9, "{zc}");
        // bisection oracle on y^2 - 2 eps f(z) = C^2
        let e = 0.1;
        let g = |z: f64| 0.25 - 2.0 * e * (z + (1.0 - z).ln()) - 1.0;
        let (mut lo, mut hi) = (-50.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = z_of_y(&0.5, &one, &eps(e), WBranch::Lower).unwrap();
        assert!((got - lo).abs() < 1e-12, "{got} vs {lo}");
        assert!((got + 5.643_663_550_934_597).abs() < 1e-12);
        assert_eq!(z_of_y(&1.5, &one, &eps(0.1), WBranch::Lower), None);
    }

    #[test]
    fn symmetry_is_an_involution() {
        assert_eq!(symmetry_map(&pp(2.0, -3.0)), pp(-2.0, -3.0));
        assert_eq!(symmetry_map(&symmetry_map(&pp(2.0, -3.0))), pp(2.0, -3.0));
        assert_eq!(curve_symmetry(&0.25, &0.5), (0.75, -0.5));
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian(&pp(0.0, 0.0), &eps(0.3)).unwrap(), -1.0);
        assert_eq!(hamiltonian(&pp(1.0, 0.0), &eps(0.5)).unwrap(), -2.0);
        assert!(hamiltonian(&pp(0.0, 2.0), &eps(0.5)).is_err());
    }
}
