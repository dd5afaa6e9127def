//! Shooting: integrate from `(y, y') = (1, s)` to x = 1 and drive `y(1) + 1`
//! to zero.
//!
//! For M and B1 the roots sit at `1 - s ~ e^{-c/ε}`, far below the spacing
//! of machine numbers near 1, so every branch is searched in the variable
//! `ℓ = ln(1 - s)`. Going up in ℓ the residual changes sign at B1 (+ to -),
//! at M (- to +) and at B0 (+ to -).

use std::io::Write;

use hpreal::Real;
use rayon::prelude::*;

use crate::asymptotics::{composite_eval, slope_b0, slope_tst, Branch, CompositeSolution};
use crate::dynamics::{Params, PhasePoint};
use crate::error::{BvpError, Result};
use crate::integrate::{csv_err, run_to_time, IntegratorConfig, Trajectory};

/// Critical ε of the pitchfork (see `bifurcation::locate_critical`).
pub const EPSILON_C: f64 = 0.215_986_928_890_290_05;

/// Magnitude reported for shots whose integration failed.
pub const SATURATED_RESIDUAL: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct ShootResult<T> {
    pub initial_slope: T,
    /// `1 - initial_slope`, exact even when the slope rounds to 1.
    pub initial_deficit: T,
    pub final_y: T,
    pub residual: T,
    pub trajectory: Trajectory<T>,
    /// The integration failed; `residual` carries only the sign of the last
    /// finite state.
    pub saturated: bool,
    /// s ≥ 1: on or above the invariant line z = 1.
    pub above_invariant_line: bool,
}

#[derive(Debug, Clone)]
pub struct BranchSolution<T> {
    pub branch: Branch,
    pub initial_slope: T,
    pub initial_deficit: T,
    pub final_slope: T,
    pub final_deficit: T,
    pub residual: T,
    pub trajectory: Trajectory<T>,
    pub epsilon: T,
    /// ε ≥ ε_c: only one solution exists and it was returned for this tag.
    pub merged: bool,
}

/// Shoot with initial slope `s`.
pub fn target<T: Real>(s: &T, params: &Params<T>, cfg: &IntegratorConfig) -> ShootResult<T> {
    target_deficit(&(s.one_like() - s.clone()), params, cfg)
}

/// Shoot with initial slope `1 - u`.
pub fn target_deficit<T: Real>(
    u: &T,
    params: &Params<T>,
    cfg: &IntegratorConfig,
) -> ShootResult<T> {
    let one = u.one_like();
    let run = run_to_time(&one, u, &one, params, cfg).expect("t_end = 1 and a validated config");
    let y_end = run.traj.final_y().clone();
    let (residual, saturated) = match run.failure {
        None => (y_end.clone() + one.clone(), false),
        Some(_) => {
            let sign = if y_end.clone() + one.clone() >= u.zero_like() {
                1.0
            } else {
                -1.0
            };
            (u.lift(sign * SATURATED_RESIDUAL), true)
        }
    };
    ShootResult {
        initial_slope: one.clone() - u.clone(),
        initial_deficit: u.clone(),
        final_y: y_end,
        residual,
        trajectory: run.traj,
        saturated,
        above_invariant_line: *u <= u.zero_like(),
    }
}

fn residual_at_log<T: Real>(l: &T, params: &Params<T>, cfg: &IntegratorConfig) -> T {
    let sparse = cfg.clone().with_dense(false);
    target_deficit(&l.exp(), params, &sparse).residual
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Crossing {
    Down,
    Up,
}

fn wanted(branch: Branch) -> Crossing {
    match branch {
        Branch::M => Crossing::Up,
        Branch::B0 | Branch::B1 => Crossing::Down,
    }
}

/// Solve for one branch.
pub fn find_branch<T: Real>(
    branch: Branch,
    params: &Params<T>,
    cfg: &IntegratorConfig,
) -> Result<BranchSolution<T>> {
    cfg.validate()?;
    let e = params.epsilon().clone();
    let merged = e.to_f64() >= EPSILON_C;
    let xtol = e.lift(cfg.rel_tol.max(4.0 * e.epsilon_like().to_f64()));
    let f = |l: &T| residual_at_log(l, params, cfg);

    let root_log = if merged {
        None
    } else {
        match branch {
            Branch::B0 => bracket_b0(params, cfg, &xtol)?,
            Branch::M | Branch::B1 => bracket_log(branch, params, cfg, &xtol),
        }
    };
    let l = match root_log {
        Some(l) => l,
        None => scan_for(branch, merged, params, cfg, &xtol, &f)?,
    };
    let u = l.exp();
    let shot = target_deficit(&u, params, cfg);
    if shot.saturated {
        return Err(BvpError::NoBranch(branch.to_string(), e.to_f64()));
    }
    let fp = shot.trajectory.final_point();
    Ok(BranchSolution {
        branch,
        initial_slope: shot.initial_slope,
        initial_deficit: u,
        final_deficit: shot.trajectory.final_deficit().clone(),
        final_slope: fp.z,
        residual: shot.residual,
        trajectory: shot.trajectory,
        epsilon: e,
        merged,
    })
}

/// B0: bracket slope_b0 ± max(5ε, 1), polished in s.
fn bracket_b0<T: Real>(params: &Params<T>, cfg: &IntegratorConfig, xtol: &T) -> Result<Option<T>> {
    let e = params.epsilon();
    let pred = slope_b0(params);
    let margin = (e.lift(5.0) * e.clone()).max_of(e.one_like());
    let lo = pred.clone() - margin.clone();
    let hi = (pred + margin).min_of(e.lift(0.5));
    let g = |s: &T| target(s, params, &cfg.clone().with_dense(false)).residual;
    let (glo, ghi) = (g(&lo), g(&hi));
    let zero = e.zero_like();
    // root with residual - below, + above
    if !(glo < zero && ghi > zero) {
        return Ok(None);
    }
    let mut gm = g;
    let s = crate::roots::brent_with_values(
        &mut gm,
        lo,
        glo,
        hi,
        ghi,
        xtol.clone() * e.lift(10.0),
        200,
    )?;
    Ok(Some((e.one_like() - s).ln()))
}

/// M and B1: bracket ln(slope_tst) by factors of 4 on either side.
fn bracket_log<T: Real>(
    branch: Branch,
    params: &Params<T>,
    cfg: &IntegratorConfig,
    xtol: &T,
) -> Option<T> {
    let pred = slope_tst(branch, params).ok()?;
    let step = pred.lift(4.0).ln();
    let centre = pred.ln();
    let zero = pred.zero_like();
    let f = |l: &T| residual_at_log(l, params, cfg);
    let (below_pos, above_pos) = match wanted(branch) {
        Crossing::Down => (true, false),
        Crossing::Up => (false, true),
    };
    let (floor, ceiling) = scan_bounds(params).ok()?;
    let mut lo = centre.clone() - step.clone();
    let mut hi = centre + step.clone();
    let mut flo = f(&lo);
    let mut fhi = f(&hi);
    for _ in 0..8 {
        let lo_ok = (flo > zero) == below_pos && !flo.is_zero_value();
        let hi_ok = (fhi > zero) == above_pos && !fhi.is_zero_value();
        if lo_ok && hi_ok {
            let mut ff = f;
            return crate::roots::brent_with_values(&mut ff, lo, flo, hi, fhi, xtol.clone(), 200)
                .ok();
        }
        // steep shots beyond the B0 root are expensive and never needed
        if !lo_ok && hi_ok {
            if lo.to_f64() < floor {
                return None;
            }
            hi = lo.clone();
            fhi = flo.clone();
            lo -= step.clone();
            flo = f(&lo);
        } else if lo_ok && !hi_ok {
            if hi.to_f64() > ceiling {
                return None;
            }
            lo = hi.clone();
            flo = fhi.clone();
            hi += step.clone();
            fhi = f(&hi);
        } else {
            return None;
        }
    }
    None
}

/// Range of ln(1 - s) covering all three branches, with margin.
fn scan_bounds<T: Real>(params: &Params<T>) -> Result<(f64, f64)> {
    let e = params.epsilon();
    let lo = slope_tst(Branch::B1, params)?.ln().to_f64().min(-2.0) - 6.0;
    let top = e.one_like() - slope_b0(params) + (e.lift(5.0) * e.clone()).max_of(e.one_like());
    let hi = top.max_of(e.lift(4.0)).ln().to_f64() + 1.0;
    Ok((lo, hi))
}

/// Fallback: sample the residual on a grid in ln(1 - s) and pick the sign
/// change belonging to `branch`.
fn scan_for<T, F>(
    branch: Branch,
    merged: bool,
    params: &Params<T>,
    cfg: &IntegratorConfig,
    xtol: &T,
    f: &F,
) -> Result<T>
where
    T: Real,
    F: Fn(&T) -> T + Sync,
{
    let e = params.epsilon();
    let (lo, hi) = scan_bounds(params)?;
    let n = 240;
    let ls: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    // the coarse scan runs in f64; only the chosen bracket is re-evaluated
    let coarse = Params::new(e.to_f64())?;
    let coarse_cfg = IntegratorConfig::new(cfg.rel_tol.max(1e-12), cfg.abs_tol.max(1e-13))?;
    let vals: Vec<f64> = ls
        .par_iter()
        .map(|l| residual_at_log(l, &coarse, &coarse_cfg))
        .collect();
    let mut changes = Vec::new();
    for i in 0..n - 1 {
        let (a, b) = (vals[i], vals[i + 1]);
        if (a > 0.0) != (b > 0.0) {
            changes.push((
                i,
                if a > 0.0 {
                    Crossing::Down
                } else {
                    Crossing::Up
                },
            ));
        }
    }
    let pick = if merged {
        changes.iter().rev().find(|c| c.1 == Crossing::Down)
    } else {
        // expected pattern: B1 down, M up, B0 down
        let downs: Vec<_> = changes.iter().filter(|c| c.1 == Crossing::Down).collect();
        let ups: Vec<_> = changes.iter().filter(|c| c.1 == Crossing::Up).collect();
        match branch {
            Branch::B1 if downs.len() >= 2 => Some(downs[0]),
            Branch::B0 if downs.len() >= 2 => downs.last().copied(),
            Branch::M => ups.first().copied().filter(|_| downs.len() >= 2),
            _ => None,
        }
    };
    let &(i, _) = pick.ok_or_else(|| BvpError::NoBranch(branch.to_string(), e.to_f64()))?;
    let no_branch = || BvpError::NoBranch(branch.to_string(), e.to_f64());
    let zero = e.zero_like();
    // widen by one cell if the working precision disagrees at the ends
    for k in 0..2 {
        let (a, b) = (i.saturating_sub(k), (i + 1 + k).min(n - 1));
        let (la, lb) = (e.lift(ls[a]), e.lift(ls[b]));
        let (fa, fb) = (f(&la), f(&lb));
        if (fa > zero) != (fb > zero) {
            let mut g = |l: &T| f(l);
            return crate::roots::brent_with_values(&mut g, la, fa, lb, fb, xtol.clone(), 200)
                .map_err(|_| no_branch());
        }
    }
    Err(no_branch())
}

/// Residual sampled uniformly in s, in input order.
pub fn scan_target<T: Real>(
    params: &Params<T>,
    s_min: &T,
    s_max: &T,
    n: usize,
    cfg: &IntegratorConfig,
) -> Vec<(T, T)> {
    let n = n.max(2);
    let sparse = cfg.clone().with_dense(false);
    let ss: Vec<T> = (0..n)
        .map(|i| {
            // endpoints exact
            let t = s_min.ratio(i as i64, (n - 1) as i64);
            s_min.clone() * (s_min.one_like() - t.clone()) + s_max.clone() * t
        })
        .collect();
    ss.par_iter()
        .map(|s| (s.clone(), target(s, params, &sparse).residual))
        .collect()
}

pub fn write_scan_csv<T: Real, W: Write>(rows: &[(T, T)], epsilon: &T, mut out: W) -> Result<()> {
    writeln!(out, "# target scan, epsilon = {epsilon}")?;
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["s", "residual"]).map_err(csv_err)?;
    for (s, r) in rows {
        wr.write_record([s.to_string(), r.to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// The solution on `n` uniform points of [0, 1]: (x, y, z).
pub fn solution_on_grid<T: Real>(sol: &BranchSolution<T>, n: usize) -> Vec<(T, PhasePoint<T>)> {
    let n = n.max(2);
    let like = &sol.epsilon;
    (0..n)
        .map(|i| {
            let x = like.ratio(i as i64, (n - 1) as i64);
            let p = sol
                .trajectory
                .state_at(&x)
                .unwrap_or_else(|| sol.trajectory.final_point());
            (x, p)
        })
        .collect()
}

pub fn write_solution_csv<T: Real, W: Write>(
    sol: &BranchSolution<T>,
    n: usize,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "# branch = {}, epsilon = {}, initial_slope = {}, final_slope = {}, merged = {}",
        sol.branch, sol.epsilon, sol.initial_slope, sol.final_slope, sol.merged
    )?;
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["x", "y", "z"]).map_err(csv_err)?;
    for (x, p) in solution_on_grid(sol, n) {
        wr.write_record([x.to_string(), p.y.to_string(), p.z.to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CompositeError<T> {
    pub max_abs_error: T,
    /// (x, composite - numerical)
    pub profile: Vec<(T, T)>,
}

/// Max-norm distance between a composite and the numerical branch on a
/// uniform grid of `n` points.
pub fn composite_error<T: Real>(
    branch: Branch,
    order: u8,
    params: &Params<T>,
    cfg: &IntegratorConfig,
    n: usize,
) -> Result<CompositeError<T>> {
    let cs = CompositeSolution::new(branch, order, params)?;
    let sol = find_branch(branch, params, &cfg.clone().with_dense(true))?;
    Ok(compare(&cs, &sol, n))
}

pub fn compare<T: Real>(
    cs: &CompositeSolution<T>,
    sol: &BranchSolution<T>,
    n: usize,
) -> CompositeError<T> {
    let profile: Vec<(T, T)> = solution_on_grid(sol, n)
        .into_iter()
        .map(|(x, p)| {
            let d = composite_eval(cs, &x).0 - p.y;
            (x, d)
        })
        .collect();
    let max_abs_error = profile
        .iter()
        .fold(sol.epsilon.zero_like(), |m, (_, d)| m.max_of(d.abs()));
    CompositeError {
        max_abs_error,
        profile,
    }
}

#[derive(Debug, Clone)]
pub struct SlopeRow<T> {
    pub epsilon: T,
    pub branch: Branch,
    pub slope: T,
    /// 1 - slope for M and B1, slope itself for B0.
    pub measured: T,
    pub predicted: T,
    pub ratio: T,
}

/// Numerical versus asymptotic initial slopes for every ε and branch.
/// Runs in parallel; rows come back in input order.
pub fn slope_sweep<T: Real>(epsilons: &[T], cfg: &IntegratorConfig) -> Vec<Result<SlopeRow<T>>> {
    let jobs: Vec<(T, Branch)> = epsilons
        .iter()
        .flat_map(|e| Branch::ALL.iter().map(move |b| (e.clone(), *b)))
        .collect();
    jobs.par_iter()
        .map(|(e, b)| {
            let params = Params::new(e.clone())?;
            let sol = find_branch(*b, &params, cfg)?;
            let (measured, predicted) = match b {
                Branch::B0 => (sol.initial_slope.clone(), slope_b0(&params)),
                _ => (sol.initial_deficit.clone(), slope_tst(*b, &params)?),
            };
            let ratio = measured.clone() / predicted.clone();
            Ok(SlopeRow {
                epsilon: e.clone(),
                branch: *b,
                slope: sol.initial_slope,
                measured,
                predicted,
                ratio,
            })
        })
        .collect()
}

pub fn write_slopes_csv<T: Real, W: Write>(rows: &[SlopeRow<T>], mut out: W) -> Result<()> {
    writeln!(out, "# M/B1: measured = 1 - y'(0) vs leading transcendental law; B0: y'(0) vs -3/(2 eps) + 1 + ln 16")?;
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record([
        "epsilon",
        "branch",
        "slope",
        "predicted_slope",
        "measured",
        "predicted",
        "ratio",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let predicted_slope = match r.branch {
            Branch::B0 => r.predicted.clone(),
            _ => r.predicted.one_like() - r.predicted.clone(),
        };
        wr.write_record([
            r.epsilon.to_string(),
            r.branch.to_string(),
            r.slope.to_string(),
            predicted_slope.to_string(),
            r.measured.to_string(),
            r.predicted.to_string(),
            r.ratio.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}
