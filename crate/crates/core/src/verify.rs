//! Self-check table run by `layerbvp verify`.
//!
//! `Fast` runs in machine precision in well under a minute; `Full` adds the
//! extended-precision slope sweeps and the convergence-rate fits.

use std::fmt;
use std::time::Instant;

use hpreal::HPReal;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::asymptotics::{
    b0_c2, inner_m1_tail, slope_b0, slope_tst, trap_comparison, Branch, CompositeSolution,
};
use crate::bifurcation::{locate_critical, roots_at, separation_exponent};
use crate::dynamics::Params;
use crate::error::Result;
use crate::integrate::{quad_singular, IntegratorConfig, SingularEnd};
use crate::shooting::{compare, find_branch, solution_on_grid, BranchSolution};
use crate::special::{dilog, f_slope, lambert_w, WBranch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fast,
    Full,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suite: Suite,
    /// Working precision for the extended-precision checks.
    pub digits: u32,
    /// Added to the M inner constant c₁ before the tail check (negative
    /// control; 0 in normal use).
    pub m_c1_offset: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            suite: Suite::Fast,
            digits: 50,
            m_c1_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub tolerance: String,
    pub passed: bool,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<38} {:<44} {:<28} {:>7.2}s",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.seconds
        )
    }
}

struct Table {
    checks: Vec<Check>,
}

impl Table {
    fn run(&mut self, name: &str, body: impl FnOnce() -> Result<(String, String, bool)>) {
        let t0 = Instant::now();
        let (measured, tolerance, passed) = match body() {
            Ok(r) => r,
            Err(e) => (format!("error: {e}"), String::new(), false),
        };
        self.checks.push(Check {
            name: name.into(),
            measured,
            tolerance,
            passed,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
}

/// Largest |w e^w - x| / |x| over `n` random arguments on both branches.
pub fn lambert_backsub_max(n: usize, seed: u64) -> Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let e_inv = (-1.0f64).exp();
    let mut worst = 0.0f64;
    for i in 0..n {
        let (x, branch) = if i % 2 == 0 {
            (rng.gen_range(-e_inv..10.0), WBranch::Principal)
        } else {
            (rng.gen_range(-e_inv..0.0), WBranch::Lower)
        };
        if x == 0.0 {
            continue;
        }
        let w = lambert_w(&x, branch)?;
        worst = worst.max(((w * w.exp() - x) / x).abs());
    }
    Ok(worst)
}

/// Li₂(x) = -∫₀¹ ln(1 - x u)/u du by quadrature.
pub fn dilog_by_quadrature(x: f64) -> Result<f64> {
    let f = |u: &f64, _: &f64| if *u == 0.0 { x } else { -(-x * u).ln_1p() / u };
    quad_singular(f, &0.0, &1.0, SingularEnd::None, 1e-15)
}

fn ok(
    measured: String,
    tolerance: impl Into<String>,
    passed: bool,
) -> Result<(String, String, bool)> {
    Ok((measured, tolerance.into(), passed))
}

fn solve_all(e: f64, cfg: &IntegratorConfig) -> Result<Vec<BranchSolution<f64>>> {
    let params = Params::new(e)?;
    Branch::ALL
        .iter()
        .map(|b| find_branch(*b, &params, cfg))
        .collect()
}

/// Run the requested suite.
pub fn run(opts: &VerifyOptions) -> Vec<Check> {
    let mut t = Table { checks: Vec::new() };
    let cfg = IntegratorConfig::new(1e-12, 1e-13).expect("valid tolerances");

    t.run("hpreal exp(ln 7)", || {
        let x = HPReal::from_i64(7, opts.digits);
        let err = ((x.ln().exp() - x.clone()) / x).abs().to_f64();
        let tol = 10f64.powi(2 - opts.digits as i32);
        ok(
            format!("rel err {err:.2e}"),
            format!("<= {tol:.0e}"),
            err <= tol,
        )
    });
    t.run("lambert W back-substitution (10^4)", || {
        let worst = lambert_backsub_max(10_000, 7)?;
        ok(
            format!("max rel residual {worst:.2e}"),
            "<= 1e-14",
            worst <= 1e-14,
        )
    });
    t.run("dilog vs quadrature on [-5, 0.9]", || {
        let mut worst = 0.0f64;
        for i in 0..=59 {
            let x = -5.0 + 5.9 * i as f64 / 59.0;
            worst = worst.max((dilog(&x)? - dilog_by_quadrature(x)?).abs());
        }
        ok(
            format!("max abs diff {worst:.2e}"),
            "<= 1e-12",
            worst <= 1e-12,
        )
    });
    t.run("B0 constant c2", || {
        let c2 = b0_c2(&0.0);
        ok(
            format!("{c2:.10}"),
            "2.594 +- 5e-4",
            (c2 - 2.594).abs() <= 5e-4,
        )
    });
    t.run("M inner tail matching", || {
        let params = Params::new(0.05)?;
        let cs = CompositeSolution::new(Branch::M, 1, &params)?;
        let c1 = cs.constants.c1 + opts.m_c1_offset;
        let worst = [30.0, 40.0, 60.0]
            .iter()
            .map(|x| inner_m1_tail(x, &c1, &cs.constants.c2).abs())
            .fold(0.0, f64::max);
        ok(
            format!("max |Y1 - X| for X in 30..60: {worst:.2e}"),
            "<= 1e-12",
            worst <= 1e-12,
        )
    });
    t.run("critical point", || {
        let c = locate_critical()?;
        let pass = (c.epsilon_c - 0.215_986_928_890_3).abs() <= 1e-9
            && (c.z_c + 3.905_263_770_3).abs() <= 1e-8
            && (c.check_final_y + 1.0).abs() <= 1e-6
            && c.check_final_z.abs() <= 1e-5;
        ok(
            format!("eps_c {:.13}, z_c {:.10}", c.epsilon_c, c.z_c),
            "1e-9 / 1e-8",
            pass,
        )
    });

    let at_tenth = solve_all(0.1, &cfg);
    t.run("eps = 0.1 slopes", || {
        let s = at_tenth.as_ref().map_err(Clone::clone)?;
        let (b0, b1) = (s[0].initial_slope, s[2].initial_slope);
        let pass = (b0 + 10.6942).abs() <= 5e-4 && format!("{b1:.4}") == "0.9999";
        ok(
            format!("B0 {b0:.6}, B1 {b1:.8}"),
            "-10.6942 +- 5e-4, 0.9999",
            pass,
        )
    });
    t.run("branch ordering", || {
        let s = at_tenth.as_ref().map_err(Clone::clone)?;
        let pass =
            s[0].initial_slope < s[1].initial_slope && s[1].initial_slope < s[2].initial_slope;
        ok("B0 < M < B1".into(), "strict", pass)
    });
    t.run("conserved drift", || {
        let s = at_tenth.as_ref().map_err(Clone::clone)?;
        let worst = s
            .iter()
            .map(|b| b.trajectory.max_conserved_drift())
            .fold(0.0, f64::max);
        ok(format!("{worst:.2e}"), "<= 1e-9", worst <= 1e-9)
    });
    t.run("endpoint relation f(z0) = f(z1)", || {
        let s = at_tenth.as_ref().map_err(Clone::clone)?;
        let worst = s
            .iter()
            .map(|b| (f_slope(&b.initial_slope) - f_slope(&b.final_slope)).abs())
            .fold(0.0, f64::max);
        ok(format!("{worst:.2e}"), "<= 1e-8", worst <= 1e-8)
    });
    t.run("B0/B1 mirror symmetry", || {
        let s = at_tenth.as_ref().map_err(Clone::clone)?;
        let (g0, g1) = (solution_on_grid(&s[0], 1001), solution_on_grid(&s[2], 1001));
        let worst = g1
            .iter()
            .zip(g0.iter().rev())
            .map(|(a, b)| (a.1.y + b.1.y).abs())
            .fold(0.0, f64::max);
        let pair = (s[0].final_slope - s[2].initial_slope).abs();
        ok(
            format!("{worst:.2e}, slope pairing {pair:.1e}"),
            "<= 1e-8",
            worst <= 1e-8 && pair <= 1e-8,
        )
    });
    t.run("B0 slope error is O(eps)", || {
        let gap = |e: f64| -> Result<f64> {
            let p = Params::new(e)?;
            Ok((find_branch(Branch::B0, &p, &cfg)?.initial_slope - slope_b0(&p)).abs())
        };
        let r = gap(0.1)? / gap(0.05)?;
        ok(
            format!("gap ratio {r:.4}"),
            "in [1.6, 2.6]",
            (1.6..=2.6).contains(&r),
        )
    });
    t.run("pitchfork root counts", || {
        let ec = locate_critical()?.epsilon_c;
        let below = roots_at(ec - 1e-3, (-1.0, 1.0), 201, &cfg)?.len();
        let above = roots_at(ec + 1e-3, (-1.0, 1.0), 201, &cfg)?.len();
        ok(
            format!("{below} below, {above} above"),
            "3 / 1",
            below == 3 && above == 1,
        )
    });
    t.run("naive M slope trap", || {
        let c = trap_comparison(&Params::new(0.05)?)?;
        let r = c.naive / c.transfer;
        ok(
            format!("naive/transfer {r:.4}"),
            "outside [0.5, 2]",
            !(0.5..=2.0).contains(&r),
        )
    });

    if opts.suite == Suite::Full {
        for branch in [Branch::B1, Branch::M] {
            t.run(&format!("{branch} transcendental slope law"), || {
                tst_sweep(branch, opts.digits)
            });
        }
        t.run("B0 composite error ~ eps^2", || {
            let mut pts = Vec::new();
            for e in [0.1, 0.05, 0.025] {
                let p = Params::new(e)?;
                let sol = find_branch(Branch::B0, &p, &cfg.clone().with_dense(true))?;
                let err =
                    compare(&CompositeSolution::new(Branch::B0, 1, &p)?, &sol, 1001).max_abs_error;
                pts.push((e.ln(), err.ln()));
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let pw = crate::bifurcation::ls_slope(&xs, &ys);
            ok(
                format!("exponent {pw:.3}"),
                "in [1.8, 2.2]",
                (1.8..=2.2).contains(&pw),
            )
        });
        t.run("pitchfork separation exponent", || {
            let ec = locate_critical()?.epsilon_c;
            let s = separation_exponent(ec, &[2.5e-4, 5e-4, 1e-3, 2e-3], (-1.0, 1.0), 201, &cfg)?;
            ok(
                format!("{:.4}", s.exponent),
                "0.5 +- 0.1",
                (s.exponent - 0.5).abs() <= 0.1,
            )
        });
    }
    t.checks
}

/// Ratio of the measured 1 - y'(0) to the leading transcendental law over
/// ε ∈ {0.10, 0.08, 0.06, 0.05, 0.04}, in extended precision.
pub fn tst_sweep(branch: Branch, digits: u32) -> Result<(String, String, bool)> {
    let cfg = IntegratorConfig::for_digits(digits);
    let mut ratios = Vec::new();
    let mut deficits = Vec::new();
    let mut in_band = true;
    for hundredths in [10, 8, 6, 5, 4] {
        let e = HPReal::from_ratio(hundredths, 100, digits);
        let p = Params::new(e.clone())?;
        let sol = find_branch(branch, &p, &cfg)?;
        let r = (sol.initial_deficit.clone() / slope_tst(branch, &p)?).to_f64();
        in_band &= (r - 1.0).abs() <= 5.0 * e.to_f64();
        ratios.push(r);
        deficits.push(sol.initial_deficit.ln().to_f64() / 10f64.ln());
    }
    let monotone = ratios
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    let span = deficits[0] - deficits[deficits.len() - 1];
    let mut tolerance = "|r-1| <= 5 eps, decreasing".to_string();
    let mut pass = in_band && monotone;
    if branch == Branch::B1 {
        tolerance += ", span >= 10";
        pass &= span >= 10.0;
    }
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    ok(
        format!("ratios {} span {span:.2}", shown.join(" ")),
        tolerance,
        pass,
    )
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilog_quadrature_oracle() {
        let want = -std::f64::consts::PI.powi(2) / 12.0;
        assert!((dilog_by_quadrature(-1.0).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn fast_suite_passes_and_control_fails() {
        let checks = run(&VerifyOptions::default());
        for c in &checks {
            assert!(c.passed, "{c}");
        }
        let broken = run(&VerifyOptions {
            m_c1_offset: 0.01,
            ..Default::default()
        });
        let tail = broken
            .iter()
            .find(|c| c.name == "M inner tail matching")
            .unwrap();
        assert!(!tail.passed);
    }
}
