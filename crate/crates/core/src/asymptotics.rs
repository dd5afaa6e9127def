//! Outer solutions, zeroth- and first-order composite solutions for the three
//! branches, asymptotic initial slopes, and the first-integral slope transfer.
//!
//! Layer variables: M has `X = (x - 1/2)/ε` and `a = 3X/4`; B0 has
//! `ξ = x/ε - atanh(1/2)`. B1 is obtained from B0 through the reversing
//! symmetry `y_B1(x) = -y_B0(1 - x)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use hpreal::Real;

use crate::dynamics::Params;
use crate::error::{BvpError, Result};
use crate::integrate::csv_err;
use crate::special::{
    dilog, dilog_neg_exp, lambert_w_exp, log_cosh, log_excess, softplus, WBranch,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    B0,
    M,
    B1,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::B0, Branch::M, Branch::B1];
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::B0 => "B0",
            Branch::M => "M",
            Branch::B1 => "B1",
        })
    }
}

impl FromStr for Branch {
    type Err = BvpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b0" => Ok(Branch::B0),
            "m" => Ok(Branch::M),
            "b1" => Ok(Branch::B1),
            _ => Err(BvpError::InvalidBranch("branch must be one of b0, m, b1")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The outer solutions: `1 + x` (left) and `x - 2` (right).
pub fn outer<T: Real>(side: Side, x: &T) -> T {
    match side {
        Side::Left => x.clone() + x.one_like(),
        Side::Right => x.clone() - x.lift(2.0),
    }
}

/// Derivation constants of a composite.
///
/// `a` is the affine part of the composite away from the layer (`y ≈ x + a`
/// on the side the branch follows; for M the mean of the two outer
/// solutions). `b`, `c` give the leading inner solution `b tanh(k X + c)`;
/// `c1`, `c2` are the first-order integration constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeConstants<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub c1: T,
    pub c2: T,
    pub x0: T,
    pub delta: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSolution<T> {
    pub branch: Branch,
    pub order: u8,
    pub params: Params<T>,
    pub constants: CompositeConstants<T>,
}

/// c₂ for B0: (1/8)(-4 Li₂(-3) + ln²3 + (4/3) ln 6912) ≈ 2.594.
pub fn b0_c2<T: Real>(like: &T) -> T {
    let li = dilog(&like.lift(-3.0)).expect("-3 is in the dilog domain");
    let l3 = like.lift(3.0).ln();
    (like.lift(-4.0) * li + l3.square() + like.ratio(4, 3) * like.lift(6912.0).ln())
        / like.lift(8.0)
}

impl<T: Real> CompositeSolution<T> {
    pub fn new(branch: Branch, order: u8, params: &Params<T>) -> Result<Self> {
        if order > 1 {
            return Err(BvpError::InvalidBranch("composite order must be 0 or 1"));
        }
        let e = params.epsilon();
        let half = e.lift(0.5);
        let beta = half.atanh();
        let ln4 = e.lift(4.0).ln();
        let constants = match branch {
            Branch::M => CompositeConstants {
                a: -half.clone(),
                b: e.lift(-1.5),
                c: e.zero_like(),
                c1: e.one_like() + ln4,
                c2: e.pi_like().square() / e.lift(18.0),
                x0: half,
                delta: e.clone(),
            },
            Branch::B0 | Branch::B1 => {
                let b1 = branch == Branch::B1;
                CompositeConstants {
                    a: if b1 { e.one_like() } else { e.lift(-2.0) },
                    b: e.lift(-2.0),
                    c: if b1 { beta } else { -beta },
                    c1: e.one_like() + e.lift(12.0).ln(),
                    c2: b0_c2(e),
                    x0: if b1 { e.one_like() } else { e.zero_like() },
                    delta: e.clone(),
                }
            }
        };
        Ok(Self {
            branch,
            order,
            params: params.clone(),
            constants,
        })
    }

    /// Replace c₁ (used by the negative-control checks).
    pub fn with_c1(mut self, c1: T) -> Self {
        self.constants.c1 = c1;
        self
    }
}

/// `(y, y')` of the composite at `x`.
pub fn composite_eval<T: Real>(cs: &CompositeSolution<T>, x: &T) -> (T, T) {
    let e = cs.params.epsilon().clone();
    let k = &cs.constants;
    match cs.branch {
        Branch::M => {
            let big_x = (x.clone() - k.x0.clone()) / e.clone();
            let a = x.ratio(3, 4) * big_x.clone();
            let s = a.sech().square();
            if cs.order == 0 {
                let y = x.clone() + k.a.clone() + k.b.clone() * a.tanh();
                let yp = x.one_like() + k.b.clone() * x.ratio(3, 4) * s / e;
                return (y, yp);
            }
            let (y1, dy1) = inner_m1(&big_x, &k.c1, &k.c2);
            let y = k.b.clone() * a.tanh() + e.clone() * y1;
            let yp = k.b.clone() * x.ratio(3, 4) * s / e + dy1;
            (y, yp)
        }
        Branch::B0 => b0_eval(cs.order, x, &e, k),
        Branch::B1 => {
            let (y, yp) = b0_eval(cs.order, &(x.one_like() - x.clone()), &e, k);
            (-y, yp)
        }
    }
}

fn b0_eval<T: Real>(order: u8, x: &T, e: &T, k: &CompositeConstants<T>) -> (T, T) {
    let beta = x.lift(0.5).atanh();
    let xi = x.clone() / e.clone() - beta;
    let s = xi.sech().square();
    let lead = k.b.clone() * xi.tanh();
    let lead_p = k.b.clone() * s / e.clone();
    if order == 0 {
        return (x.clone() + lead, x.one_like() + lead_p);
    }
    let (y1, dy1) = inner_b0_1(&xi, &k.c1, &k.c2);
    (lead + e.clone() * y1, lead_p + dy1)
}

/// First-order M inner correction Y₁(X) and dY₁/dX.
///
/// The products of sech² with the growing terms are evaluated with sech²
/// itself (never sinh·sech²), so no overflow occurs for any X.
pub fn inner_m1<T: Real>(big_x: &T, c1: &T, c2: &T) -> (T, T) {
    let a = big_x.ratio(3, 4) * big_x.clone();
    let s = a.sech().square();
    let t = a.tanh();
    let l = log_cosh(&a);
    let ln2 = big_x.lift(2.0).ln();
    let two = big_x.lift(2.0);
    let three = big_x.lift(3.0);
    let m2a = -two.clone() * a.clone();
    let p = big_x.lift(16.0) * dilog_neg_exp(&m2a)
        + big_x.lift(24.0) * c2.clone()
        + three.clone()
            * big_x.clone()
            * (three * big_x.clone() + big_x.lift(4.0) + big_x.lift(4.0) * c1.clone()
                - big_x.lift(8.0) * ln2.clone());
    let bracket = two.clone() * l - big_x.one_like() + c1.clone();
    let r = big_x.lift(16.0) * t.clone() * bracket.clone();
    let y1 = (s.clone() * p.clone() + r) / big_x.lift(24.0);

    let dp =
        big_x.lift(24.0) * softplus(&m2a) + big_x.lift(18.0) * big_x.clone() + big_x.lift(12.0)
            - big_x.lift(24.0) * ln2
            + big_x.lift(12.0) * c1.clone();
    let dr = big_x.lift(12.0) * (s.clone() * bracket + two * t.square());
    let ds = big_x.lift(-1.5) * s.clone() * t;
    let dy1 = (ds * p + s * dp + dr) / big_x.lift(24.0);
    (y1, dy1)
}

/// Y₁ᴹ(X) - X for X ≥ 0, rearranged so the linear growth cancels exactly.
/// Tends to (2/3)(c₁ - 1 - ln 4) as X → ∞.
pub fn inner_m1_tail<T: Real>(big_x: &T, c1: &T, c2: &T) -> T {
    let a = big_x.ratio(3, 4) * big_x.clone();
    let s = a.sech().square();
    let q = (big_x.lift(-2.0) * a.clone()).exp();
    let t = a.tanh();
    let ln2 = big_x.lift(2.0).ln();
    let three = big_x.lift(3.0);
    let p = big_x.lift(16.0) * dilog_neg_exp(&(big_x.lift(-2.0) * a))
        + big_x.lift(24.0) * c2.clone()
        + three.clone()
            * big_x.clone()
            * (three * big_x.clone() + big_x.lift(4.0) + big_x.lift(4.0) * c1.clone()
                - big_x.lift(8.0) * ln2.clone());
    let one = big_x.one_like();
    // (2/3) T (2 ln cosh a - 1 + c1) - X with ln cosh a = a + ln(1+q) - ln 2
    let lin = -big_x.lift(2.0) * q.clone() * big_x.clone() / (one.clone() + q.clone());
    let rest = big_x.ratio(2, 3)
        * t
        * (big_x.lift(2.0) * q.ln_1p() - big_x.lift(2.0) * ln2 - one + c1.clone());
    s * p / big_x.lift(24.0) + lin + rest
}

/// First-order B0 inner correction Y₁(ξ) and dY₁/dξ.
pub fn inner_b0_1<T: Real>(xi: &T, c1: &T, c2: &T) -> (T, T) {
    let s = xi.sech().square();
    let t = xi.tanh();
    let l = log_cosh(xi);
    let two = xi.lift(2.0);
    let four = xi.lift(4.0);
    let ln4 = four.ln();
    let m2 = -two.clone() * xi.clone();
    let q = four.clone() * c2.clone()
        + two.clone() * xi.clone() * (xi.clone() + xi.one_like() + c1.clone() - ln4.clone())
        + two.clone() * dilog_neg_exp(&m2);
    let bracket = c1.clone() - xi.one_like() + two.clone() * l;
    let y1 = (s.clone() * q.clone() + two.clone() * t.clone() * bracket.clone()) / four.clone();
    let dq = two.clone() * (two.clone() * xi.clone() + xi.one_like() + c1.clone() - ln4)
        + four.clone() * softplus(&m2);
    let dy1 = (-two.clone() * s.clone() * t.clone() * q
        + s.clone() * dq
        + two.clone() * (s * bracket + two * t.square()))
        / four;
    (y1, dy1)
}

/// y'_B0(0) ≈ -3/(2ε) + 1 + ln 16.
pub fn slope_b0<T: Real>(params: &Params<T>) -> T {
    let e = params.epsilon();
    e.lift(-1.5) / e.clone() + e.one_like() + e.lift(16.0).ln()
}

/// The slope `z0` at height 1 on the trajectory through `(y1, z1)`.
pub fn slope_transfer<T: Real>(y1: &T, z1: &T, params: &Params<T>, branch: WBranch) -> Result<T> {
    let w0 = slope_transfer_deficit(y1, &(z1.one_like() - z1.clone()), params, branch)?;
    Ok(w0.one_like() - w0)
}

/// As [`slope_transfer`] in deficits: returns `1 - z0` given `w1 = 1 - z1`.
///
/// 1 - z0 = -W(-(1 - z1) exp((1 - y1²)/(2ε) - (1 - z1))), evaluated in the
/// branch-point parametrisation so transcendentally small results keep their
/// relative accuracy.
pub fn slope_transfer_deficit<T: Real>(
    y1: &T,
    w1: &T,
    params: &Params<T>,
    branch: WBranch,
) -> Result<T> {
    if !(*w1 > w1.zero_like()) {
        return Err(BvpError::Domain {
            what: "slope_transfer",
            value: 1.0 - w1.to_f64(),
        });
    }
    let e = params.epsilon();
    let s = log_excess(w1) + (y1.square() - y1.one_like()) / (y1.lift(2.0) * e.clone());
    if s < s.zero_like() {
        return Err(BvpError::NoCrossing(1.0));
    }
    Ok(-lambert_w_exp(&s, branch)?)
}

/// Predicted 1 - y'(0): (24/ε) e^{-3/(2ε)} for B1, (9/(2ε)) e^{-5/(8ε)} for M.
pub fn slope_tst<T: Real>(branch: Branch, params: &Params<T>) -> Result<T> {
    let e = params.epsilon().clone();
    match branch {
        Branch::B1 => Ok(e.lift(24.0) / e.clone() * (e.lift(-1.5) / e).exp()),
        Branch::M => Ok(e.lift(4.5) / e.clone() * (e.ratio(-5, 8) / e).exp()),
        Branch::B0 => Err(BvpError::InvalidBranch(
            "B0's initial slope is not exponentially close to 1",
        )),
    }
}

/// The un-simplified predictions: the B0 slope (for B1) or the first-order M
/// slope at x = 1/2 (for M), transferred along its trajectory to y = 1.
pub fn slope_tst_transfer<T: Real>(branch: Branch, params: &Params<T>) -> Result<T> {
    let e = params.epsilon().clone();
    match branch {
        Branch::B1 => {
            let w1 = e.one_like() - slope_b0(params);
            slope_transfer_deficit(&e.lift(-1.0), &w1, params, WBranch::Principal)
        }
        Branch::M => {
            let w1 = e.ratio(9, 8) / e.clone() - e.lift(4.0).ln();
            slope_transfer_deficit(&e.zero_like(), &w1, params, WBranch::Principal)
        }
        Branch::B0 => Err(BvpError::InvalidBranch(
            "B0's initial slope is not exponentially close to 1",
        )),
    }
}

/// 1 - y'(0) from differentiating the M composite of the given order at
/// x = 0. This is the tempting shortcut that gets the exponent wrong.
pub fn naive_slope_deficit_m<T: Real>(order: u8, params: &Params<T>) -> Result<T> {
    let cs = CompositeSolution::new(Branch::M, order, params)?;
    let e = params.epsilon().clone();
    let big_x = e.lift(-0.5) / e.clone();
    let a = big_x.ratio(3, 4) * big_x.clone();
    let s = a.sech().square();
    // 1 - y' = (9/(8ε)) sech²a + (1 - dY/dX), computed without cancelling against 1
    let lead = e.ratio(9, 8) * s / e.clone();
    if order == 0 {
        return Ok(lead);
    }
    let (_, dy1) = inner_m1(&big_x, &cs.constants.c1, &cs.constants.c2);
    Ok(lead + e.one_like() - dy1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapComparison<T> {
    pub naive: T,
    pub transfer: T,
    pub tst: T,
}

/// Naive first-order versus transfer-based 1 - y'_M(0).
pub fn trap_comparison<T: Real>(params: &Params<T>) -> Result<TrapComparison<T>> {
    Ok(TrapComparison {
        naive: naive_slope_deficit_m(1, params)?,
        transfer: slope_tst_transfer(Branch::M, params)?,
        tst: slope_tst(Branch::M, params)?,
    })
}

/// Composite curve on `n` uniform points of [0, 1] as CSV (x, y, y_prime).
pub fn write_composite_csv<T: Real, W: Write>(
    cs: &CompositeSolution<T>,
    n: usize,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "# branch = {}, order = {}, epsilon = {}",
        cs.branch,
        cs.order,
        cs.params.epsilon()
    )?;
    let k = &cs.constants;
    writeln!(
        out,
        "# a = {}, b = {}, c = {}, c1 = {}, c2 = {}, x0 = {}, delta = {}",
        k.a, k.b, k.c, k.c1, k.c2, k.x0, k.delta
    )?;
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["x", "y", "y_prime"]).map_err(csv_err)?;
    let like = cs.params.epsilon();
    let n = n.max(2);
    for i in 0..n {
        let x = like.ratio(i as i64, (n - 1) as i64);
        let (y, yp) = composite_eval(cs, &x);
        wr.write_record([x.to_string(), y.to_string(), yp.to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(e: f64) -> Params<f64> {
        Params::new(e).unwrap()
    }

    fn comp(b: Branch, order: u8, e: f64) -> CompositeSolution<f64> {
        CompositeSolution::new(b, order, &p(e)).unwrap()
    }

    #[test]
    fn outer_examples() {
        assert_eq!(outer(Side::Left, &0.0), 1.0);
        assert_eq!(outer(Side::Right, &1.0), -1.0);
        assert_eq!(outer(Side::Right, &0.5), -1.5);
    }

    #[test]
    fn constants_per_branch() {
        let m = comp(Branch::M, 1, 0.1).constants;
        assert_eq!((m.x0, m.b, m.c), (0.5, -1.5, 0.0));
        let b0 = comp(Branch::B0, 1, 0.1).constants;
        assert_eq!((b0.x0, b0.b), (0.0, -2.0));
        assert!((b0.c + 0.5f64.atanh()).abs() < 1e-16);
        let b1 = comp(Branch::B1, 1, 0.1).constants;
        assert_eq!((b1.x0, b1.c), (1.0, 0.5f64.atanh()));
        assert!((b0.c2 - 2.594_058_715_565_576).abs() < 1e-14);
        assert!(CompositeSolution::new(Branch::M, 2, &p(0.1)).is_err());
    }

    #[test]
    fn composite_examples() {
        assert_eq!(composite_eval(&comp(Branch::M, 0, 0.1), &0.5).0, 0.0);
        let (y, yp) = composite_eval(&comp(Branch::B0, 0, 0.1), &0.0);
        assert!((y - 1.0).abs() < 1e-15);
        assert!((yp + 14.0).abs() < 1e-12);
        let (_, yp) = composite_eval(&comp(Branch::M, 1, 0.1), &0.5);
        let want = -9.0 / 0.8 + 1.0 + 4f64.ln();
        assert!((yp - want).abs() < 1e-12, "{yp} vs {want}");
        assert!((yp + 8.863_705_638_880_1).abs() < 1e-10);
    }

    #[test]
    fn first_order_boundary_values_are_exact() {
        for e in [0.1, 0.05, 0.02] {
            let (y, yp) = composite_eval(&comp(Branch::B0, 1, e), &0.0);
            assert!((y - 1.0).abs() < 1e-13, "eps={e}: {y}");
            assert!((yp - slope_b0(&p(e))).abs() < 1e-10);
            let (y, _) = composite_eval(&comp(Branch::B1, 1, e), &1.0);
            assert!((y + 1.0).abs() < 1e-13);
            // M passes through zero at the centre
            assert!(composite_eval(&comp(Branch::M, 1, e), &0.5).0.abs() < 1e-15);
        }
    }

    #[test]
    fn m_inner_correction_vanishes_at_centre_and_matches_tail() {
        let c = comp(Branch::M, 1, 0.1).constants;
        assert!(inner_m1(&0.0, &c.c1, &c.c2).0.abs() < 1e-15);
        assert!(inner_m1_tail(&30.0, &c.c1, &c.c2).abs() < 1e-15);
        for x in [0.5, 2.0, 6.0] {
            let direct = inner_m1(&x, &c.c1, &c.c2).0 - x;
            assert!((direct - inner_m1_tail(&x, &c.c1, &c.c2)).abs() < 1e-13);
        }
        // perturbed c1 leaves an O(1) offset
        assert!(inner_m1_tail(&30.0, &(c.c1 + 0.01), &c.c2).abs() > 1e-3);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for (b, x) in [
            (Branch::M, 0.47),
            (Branch::B0, 0.03),
            (Branch::B1, 0.96),
            (Branch::M, 0.1),
        ] {
            for order in [0, 1] {
                let cs = comp(b, order, 0.1);
                let h = 1e-6;
                let fd =
                    (composite_eval(&cs, &(x + h)).0 - composite_eval(&cs, &(x - h)).0) / (2.0 * h);
                let an = composite_eval(&cs, &x).1;
                assert!(
                    (fd - an).abs() < 1e-6 * an.abs().max(1.0),
                    "{b} order {order}: {fd} vs {an}"
                );
            }
        }
    }

    #[test]
    fn slope_b0_examples() {
        assert!((slope_b0(&p(0.1)) + 11.227_411_277_760_22).abs() < 1e-12);
        assert!((slope_b0(&p(0.05)) + 26.227_411_277_760_22).abs() < 1e-12);
        assert!((slope_b0(&p(1e-6)) * 1e-6 + 1.5).abs() < 1e-5);
    }

    #[test]
    fn slope_transfer_examples() {
        let z0 = slope_transfer(&1.0, &0.5, &p(0.3), WBranch::Principal).unwrap();
        assert!((z0 - 0.5).abs() < 1e-15);
        let e = 0.1;
        let w0 = slope_transfer_deficit(&-1.0, &(1.0 - slope_b0(&p(e))), &p(e), WBranch::Principal)
            .unwrap();
        let tst = slope_tst(Branch::B1, &p(e)).unwrap();
        assert!((w0 / tst - 1.0).abs() < 0.2, "{w0} vs {tst}");
        assert!((tst - 7.342e-5).abs() < 1e-8);
        assert!(slope_transfer(&0.0, &0.5, &p(0.1), WBranch::Principal).is_err());
    }

    #[test]
    fn tst_examples() {
        assert!((slope_tst(Branch::M, &p(0.1)).unwrap() - 45.0 * (-6.25f64).exp()).abs() < 1e-16);
        assert!(slope_tst(Branch::B1, &p(0.01)).unwrap() < 1e-60);
        assert!(slope_tst(Branch::B0, &p(0.1)).is_err());
        let m = slope_tst_transfer(Branch::M, &p(0.05)).unwrap();
        let lead = slope_tst(Branch::M, &p(0.05)).unwrap();
        assert!((m / lead - 1.0).abs() < 0.1);
    }

    #[test]
    fn naive_slope_misses_the_exponent() {
        let t = trap_comparison(&p(0.05)).unwrap();
        let ratio = t.naive / t.transfer;
        assert!(!(0.5..=2.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn branch_parsing() {
        assert_eq!("b1".parse::<Branch>().unwrap(), Branch::B1);
        assert_eq!("M".parse::<Branch>().unwrap(), Branch::M);
        assert!("x".parse::<Branch>().is_err());
        assert_eq!(Branch::B0.to_string(), "B0");
    }
}
