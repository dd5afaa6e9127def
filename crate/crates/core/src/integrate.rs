//! Adaptive Dormand–Prince 5(4) integration of the phase-plane system, and
//! tanh–sinh quadrature for integrands with an endpoint singularity.
//!
//! The integrator advances `(y, w)` with `w = 1 - z`. Since `w' = y w / ε`,
//! `w` never changes sign and is error-controlled in the relative sense only;
//! `abs_tol` applies to `y`. This is what lets machine-precision runs follow
//! trajectories whose initial slope differs from 1 by 10⁻¹⁴.

use std::io::Write;

use hpreal::Real;

use crate::dynamics::{conserved_deficit, rhs_deficit, Params, PhasePoint};
use crate::error::{BvpError, Result};
use crate::roots::brent;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Keep every accepted step (needed for evaluation inside the interval);
    /// otherwise only the endpoints are stored.
    pub dense_output: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 500_000,
            dense_output: true,
        }
    }
}

impl IntegratorConfig {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Result<Self> {
        let cfg = Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_steps > 0) {
            return Err(BvpError::Domain {
                what: "IntegratorConfig",
                value: self.rel_tol.min(self.abs_tol),
            });
        }
        Ok(())
    }

    /// Tolerances for extended-precision runs at `digits` decimal digits.
    ///
    /// Follows 10^(8 - digits) but never asks for less than 10⁻¹⁸: a fifth
    /// order method needs ~tol^(-1/5) steps, and the deficit formulation
    /// already carries the relevant information at that level.
    pub fn for_digits(digits: u32) -> Self {
        let rel = 10f64.powi(8 - digits as i32).max(1e-18);
        Self {
            rel_tol: rel,
            abs_tol: rel,
            max_steps: 2_000_000,
            dense_output: false,
        }
    }

    pub fn with_dense(mut self, dense: bool) -> Self {
        self.dense_output = dense;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalEvent<T> {
    pub description: String,
    pub t: T,
}

/// A sampled solution. Samples carry the state and its derivative, so the
/// cubic Hermite interpolant is available between them.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    params: Params<T>,
    t: Vec<T>,
    y: Vec<T>,
    w: Vec<T>,
    dy: Vec<T>,
    dw: Vec<T>,
    dense: bool,
    pub terminal_event: Option<TerminalEvent<T>>,
    pub steps: usize,
    pub rejected: usize,
}

impl<T: Real> Trajectory<T> {
    fn start(params: &Params<T>, y0: T, w0: T, dense: bool) -> Self {
        let (dy, dw) = rhs_deficit(&y0, &w0, params.epsilon());
        Self {
            params: params.clone(),
            t: vec![y0.zero_like()],
            y: vec![y0],
            w: vec![w0],
            dy: vec![dy],
            dw: vec![dw],
            dense,
            terminal_event: None,
            steps: 0,
            rejected: 0,
        }
    }

    fn push(&mut self, t: T, y: T, w: T, dy: T, dw: T) {
        if !self.dense && self.t.len() == 2 {
            self.t.pop();
            self.y.pop();
            self.w.pop();
            self.dy.pop();
            self.dw.pop();
        }
        self.t.push(t);
        self.y.push(y);
        self.w.push(w);
        self.dy.push(dy);
        self.dw.push(dw);
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.t
    }

    pub fn ys(&self) -> &[T] {
        &self.y
    }

    pub fn deficits(&self) -> &[T] {
        &self.w
    }

    pub fn point(&self, i: usize) -> PhasePoint<T> {
        PhasePoint::new(self.y[i].clone(), self.w[i].one_like() - self.w[i].clone())
    }

    pub fn final_point(&self) -> PhasePoint<T> {
        self.point(self.len() - 1)
    }

    pub fn final_time(&self) -> &T {
        self.t.last().expect("trajectory has a start sample")
    }

    pub fn final_y(&self) -> &T {
        self.y.last().expect("trajectory has a start sample")
    }

    /// `1 - z` at the last sample.
    pub fn final_deficit(&self) -> &T {
        self.w.last().expect("trajectory has a start sample")
    }

    /// C² at sample `i`; requires z < 1 there.
    pub fn c_squared(&self, i: usize) -> T {
        conserved_deficit(&self.y[i], &self.w[i], &self.params)
    }

    /// max |C²(t) - C²(0)| over the stored samples.
    pub fn max_conserved_drift(&self) -> T {
        let c0 = self.c_squared(0);
        let mut worst = c0.zero_like();
        for i in 1..self.len() {
            worst = worst.max_of((self.c_squared(i) - c0.clone()).abs());
        }
        worst
    }

    fn bracket(&self, t: &T) -> Option<usize> {
        let n = self.len();
        if n < 2 || *t < self.t[0] || *t > self.t[n - 1] {
            return None;
        }
        let i = self.t.partition_point(|s| s <= t);
        Some(i.clamp(1, n - 1) - 1)
    }

    /// Cubic Hermite interpolation between stored samples.
    pub fn hermite_at(&self, t: &T) -> Option<PhasePoint<T>> {
        let i = self.bracket(t)?;
        let (y, w) = self.hermite_in(i, t);
        Some(PhasePoint::new(y, w.one_like() - w))
    }

    fn hermite_in(&self, i: usize, t: &T) -> (T, T) {
        let h = self.t[i + 1].clone() - self.t[i].clone();
        let th = (t.clone() - self.t[i].clone()) / h.clone();
        let one = t.one_like();
        let two = t.lift(2.0);
        let three = t.lift(3.0);
        let th2 = th.square();
        let th3 = th2.clone() * th.clone();
        let h00 = two.clone() * th3.clone() - three.clone() * th2.clone() + one;
        let h10 = th3.clone() - two * th2.clone() + th;
        let h01 = three * th2.clone() - t.lift(2.0) * th3.clone();
        let h11 = th3 - th2;
        let interp = |x0: &T, f0: &T, x1: &T, f1: &T| {
            h00.clone() * x0.clone()
                + h10.clone() * h.clone() * f0.clone()
                + h01.clone() * x1.clone()
                + h11.clone() * h.clone() * f1.clone()
        };
        (
            interp(&self.y[i], &self.dy[i], &self.y[i + 1], &self.dy[i + 1]),
            interp(&self.w[i], &self.dw[i], &self.w[i + 1], &self.dw[i + 1]),
        )
    }

    /// State at `t` by a single Dormand–Prince step from the preceding
    /// sample; as accurate as the integration itself.
    pub fn state_at(&self, t: &T) -> Option<PhasePoint<T>> {
        let i = self.bracket(t)?;
        if *t == self.t[i] {
            return Some(self.point(i));
        }
        let tab = Tableau::new(t);
        let h = t.clone() - self.t[i].clone();
        let x = [self.y[i].clone(), self.w[i].clone()];
        let k1 = [self.dy[i].clone(), self.dw[i].clone()];
        let (xn, _, _) = tab.step(&x, &k1, &h, self.params.epsilon());
        let [y, w] = xn;
        Some(PhasePoint::new(y, w.one_like() - w))
    }

    /// CSV with columns t, y, z, c_squared at full working precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# epsilon = {}", self.params.epsilon())?;
        if let Some(ev) = &self.terminal_event {
            writeln!(out, "# terminal event: {} at t = {}", ev.description, ev.t)?;
        }
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["t", "y", "z", "c_squared"])
            .map_err(csv_err)?;
        for i in 0..self.len() {
            let z = self.w[i].one_like() - self.w[i].clone();
            let c2 = if self.w[i] > self.w[i].zero_like() {
                self.c_squared(i).to_string()
            } else {
                "NaN".into()
            };
            wr.write_record([
                self.t[i].to_string(),
                self.y[i].to_string(),
                z.to_string(),
                c2,
            ])
            .map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> BvpError {
    BvpError::Io(e.to_string())
}

const A: [&[(i64, i64)]; 7] = [
    &[],
    &[(1, 5)],
    &[(3, 40), (9, 40)],
    &[(44, 45), (-56, 15), (32, 9)],
    &[(19372, 6561), (-25360, 2187), (64448, 6561), (-212, 729)],
    &[
        (9017, 3168),
        (-355, 33),
        (46732, 5247),
        (49, 176),
        (-5103, 18656),
    ],
    &[
        (35, 384),
        (0, 1),
        (500, 1113),
        (125, 192),
        (-2187, 6784),
        (11, 84),
    ],
];

// fifth minus fourth order weights
const E: [(i64, i64); 7] = [
    (71, 57600),
    (0, 1),
    (-71, 16695),
    (71, 1920),
    (-17253, 339200),
    (22, 525),
    (-1, 40),
];

struct Tableau<T> {
    a: Vec<Vec<T>>,
    e: Vec<T>,
}

impl<T: Real> Tableau<T> {
    fn new(like: &T) -> Self {
        Self {
            a: A.iter()
                .map(|row| row.iter().map(|&(p, q)| like.ratio(p, q)).collect())
                .collect(),
            e: E.iter().map(|&(p, q)| like.ratio(p, q)).collect(),
        }
    }

    /// One step of size `h`; returns the new state, its derivative (FSAL) and
    /// the embedded error estimate.
    fn step(&self, x: &[T; 2], k1: &[T; 2], h: &T, eps: &T) -> ([T; 2], [T; 2], [T; 2]) {
        let mut k: Vec<[T; 2]> = Vec::with_capacity(7);
        k.push(k1.clone());
        let mut xs = x.clone();
        for s in 1..7 {
            let mut acc = [x[0].zero_like(), x[0].zero_like()];
            for (j, a) in self.a[s].iter().enumerate() {
                if a.is_zero_value() {
                    continue;
                }
                acc[0] += a.clone() * k[j][0].clone();
                acc[1] += a.clone() * k[j][1].clone();
            }
            xs = [
                x[0].clone() + h.clone() * acc[0].clone(),
                x[1].clone() + h.clone() * acc[1].clone(),
            ];
            let (dy, dw) = rhs_deficit(&xs[0], &xs[1], eps);
            k.push([dy, dw]);
        }
        let mut err = [x[0].zero_like(), x[0].zero_like()];
        for (j, e) in self.e.iter().enumerate() {
            if e.is_zero_value() {
                continue;
            }
            err[0] += e.clone() * k[j][0].clone();
            err[1] += e.clone() * k[j][1].clone();
        }
        let err = [h.clone() * err[0].clone(), h.clone() * err[1].clone()];
        let k7 = k.pop().expect("seven stages");
        (xs, k7, err)
    }
}

enum Stop<'a, T> {
    Time,
    Event(&'a T),
}

/// Result of a run that may have stopped early; the partial trajectory is
/// kept so callers can inspect the last finite state.
pub(crate) struct Run<T> {
    pub traj: Trajectory<T>,
    pub failure: Option<BvpError>,
}

fn run<T: Real>(
    y0: T,
    w0: T,
    t_end: &T,
    stop: Stop<'_, T>,
    params: &Params<T>,
    cfg: &IntegratorConfig,
) -> Run<T> {
    let eps = params.epsilon().clone();
    let tab = Tableau::new(&y0);
    let mut traj = Trajectory::start(params, y0.clone(), w0.clone(), cfg.dense_output);
    let rtol = y0.lift(cfg.rel_tol);
    let atol = y0.lift(cfg.abs_tol);
    let zero = y0.zero_like();
    let mut t = zero.clone();
    let mut x = [y0.clone(), w0.clone()];
    let (dy, dw) = rhs_deficit(&x[0], &x[1], &eps);
    let mut k1 = [dy, dw];
    let mut h = y0.lift(initial_step(&x, &k1, t_end.to_f64(), cfg, &eps));
    let mut last_rejected = false;

    let scale = |old: &[T; 2], new: &[T; 2]| {
        [
            atol.clone() + rtol.clone() * old[0].abs().max_of(new[0].abs()),
            rtol.clone() * old[1].abs().max_of(new[1].abs()),
        ]
    };

    loop {
        if t >= *t_end {
            break;
        }
        if traj.steps + traj.rejected >= cfg.max_steps {
            return Run {
                traj,
                failure: Some(BvpError::TooManySteps(cfg.max_steps)),
            };
        }
        let remaining = t_end.clone() - t.clone();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let (xn, k7, err) = tab.step(&x, &k1, &h, &eps);
        let finite = xn
            .iter()
            .chain(k7.iter())
            .all(|v| v.is_finite_value() && v.abs().to_f64() < 1e250);
        if !finite {
            if h.abs().to_f64() < 1e-300 {
                return Run {
                    traj,
                    failure: Some(BvpError::BlowUp(t.to_f64())),
                };
            }
            h *= y0.lift(0.1);
            traj.rejected += 1;
            last_rejected = true;
            continue;
        }
        let sc = scale(&x, &xn);
        let ew = if sc[1].is_zero_value() {
            // on the invariant line w stays exactly zero
            if err[1].is_zero_value() {
                zero.clone()
            } else {
                y0.lift(f64::INFINITY)
            }
        } else {
            (err[1].clone() / sc[1].clone()).abs()
        };
        let en = (err[0].clone() / sc[0].clone()).abs().max_of(ew).to_f64();
        if en > 1.0 || en.is_nan() {
            let fac = (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
            h *= y0.lift(if fac.is_finite() { fac } else { 0.2 });
            traj.rejected += 1;
            last_rejected = true;
            if (h.to_f64().abs()) < 1e-14 * (1.0 + t.to_f64().abs()) && en > 1.0 {
                return Run {
                    traj,
                    failure: Some(BvpError::BlowUp(t.to_f64())),
                };
            }
            continue;
        }
        traj.steps += 1;
        if xn.iter().any(|v| v.abs().to_f64() > 1e200)
            || h.to_f64() < 1e-12 * (1.0 + t.to_f64().abs())
        {
            // finite-time blow-up: steps shrink geometrically towards the pole
            return Run {
                traj,
                failure: Some(BvpError::BlowUp(t.to_f64())),
            };
        }
        let t_new = if last {
            t_end.clone()
        } else {
            t.clone() + h.clone()
        };

        if let Stop::Event(level) = &stop {
            let g0 = x[0].clone() - (*level).clone();
            let g1 = xn[0].clone() - (*level).clone();
            let crossed = g1.is_zero_value() || ((g0 > zero) != (g1 > zero) && !g0.is_zero_value());
            if crossed {
                let (te, xe, ke) = locate_event(&tab, &t, &x, &k1, &h, &xn, &k7, level, &eps, cfg);
                traj.push(
                    te.clone(),
                    xe[0].clone(),
                    xe[1].clone(),
                    ke[0].clone(),
                    ke[1].clone(),
                );
                traj.terminal_event = Some(TerminalEvent {
                    description: format!("y = {level}"),
                    t: te,
                });
                return Run {
                    traj,
                    failure: None,
                };
            }
        }

        traj.push(
            t_new.clone(),
            xn[0].clone(),
            xn[1].clone(),
            k7[0].clone(),
            k7[1].clone(),
        );
        t = t_new;
        x = xn;
        k1 = k7;
        let fac = if en == 0.0 {
            5.0
        } else {
            (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
        };
        let fac = if last_rejected { fac.min(1.0) } else { fac };
        last_rejected = false;
        h *= y0.lift(fac);
    }
    Run {
        traj,
        failure: None,
    }
}

fn initial_step<T: Real>(
    x: &[T; 2],
    f: &[T; 2],
    span: f64,
    cfg: &IntegratorConfig,
    eps: &T,
) -> f64 {
    let xs = [x[0].to_f64(), x[1].to_f64()];
    let fs = [f[0].to_f64(), f[1].to_f64()];
    let sc = [
        cfg.abs_tol + cfg.rel_tol * xs[0].abs(),
        cfg.rel_tol * xs[1].abs().max(1e-300),
    ];
    let norm = |v: [f64; 2]| (v[0] / sc[0]).abs().max((v[1] / sc[1]).abs());
    let d0 = norm(xs);
    let d1 = norm(fs);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(span);
    let x1 = [xs[0] + h0 * fs[0], xs[1] + h0 * fs[1]];
    let e = eps.to_f64();
    let f1 = [1.0 - x1[1], x1[0] * x1[1] / e];
    let d2 = norm([f1[0] - fs[0], f1[1] - fs[1]]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span).max(1e-12 * span)
}

#[allow(clippy::too_many_arguments)]
fn locate_event<T: Real>(
    tab: &Tableau<T>,
    t0: &T,
    x0: &[T; 2],
    k0: &[T; 2],
    h: &T,
    x1: &[T; 2],
    k1: &[T; 2],
    level: &T,
    eps: &T,
    cfg: &IntegratorConfig,
) -> (T, [T; 2], [T; 2]) {
    let one = h.one_like();
    if (x1[0].clone() - level.clone()).is_zero_value() {
        return (t0.clone() + h.clone(), x1.clone(), k1.clone());
    }
    // Hermite guess on the unit interval, then Newton with exact sub-steps
    let herm = |th: &T| {
        let th2 = th.square();
        let th3 = th2.clone() * th.clone();
        let two = th.lift(2.0);
        let three = th.lift(3.0);
        (two.clone() * th3.clone() - three.clone() * th2.clone() + one.clone()) * x0[0].clone()
            + (th3.clone() - two.clone() * th2.clone() + th.clone()) * h.clone() * k0[0].clone()
            + (three * th2.clone() - two * th3.clone()) * x1[0].clone()
            + (th3 - th2) * h.clone() * k1[0].clone()
            - level.clone()
    };
    let tol = h.lift(cfg.rel_tol.min(1e-6) * 1e-2);
    let th = brent(herm, h.zero_like(), one.clone(), tol, 200).unwrap_or_else(|_| h.lift(0.5));
    let mut dt = th * h.clone();
    let mut best = tab.step(x0, k0, &dt, eps);
    for _ in 0..8 {
        let (xe, ke, _) = &best;
        let g = xe[0].clone() - level.clone();
        if ke[0].abs().to_f64() < 1e-300 {
            break;
        }
        let corr = g / ke[0].clone();
        dt -= corr.clone();
        if dt < dt.zero_like() {
            dt = dt.zero_like();
        }
        if dt > *h {
            dt = h.clone();
        }
        best = tab.step(x0, k0, &dt, eps);
        if corr.abs() <= h.abs() * h.lift(4.0) * h.epsilon_like() {
            break;
        }
    }
    let (xe, ke, _) = best;
    (t0.clone() + dt, xe, ke)
}

/// Integrate from `p0` (z < 1) to time `t_end`.
pub fn integrate_to_time<T: Real>(
    p0: &PhasePoint<T>,
    t_end: &T,
    params: &Params<T>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<T>> {
    check_start(p0, t_end)?;
    integrate_deficit_to_time(&p0.y, &p0.deficit(), t_end, params, cfg)
}

/// As [`integrate_to_time`], with the initial slope given as `w0 = 1 - z0`.
pub fn integrate_deficit_to_time<T: Real>(
    y0: &T,
    w0: &T,
    t_end: &T,
    params: &Params<T>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<T>> {
    let r = run_to_time(y0, w0, t_end, params, cfg)?;
    match r.failure {
        Some(e) => Err(e),
        None => Ok(r.traj),
    }
}

pub(crate) fn run_to_time<T: Real>(
    y0: &T,
    w0: &T,
    t_end: &T,
    params: &Params<T>,
    cfg: &IntegratorConfig,
) -> Result<Run<T>> {
    cfg.validate()?;
    if !(*t_end > t_end.zero_like()) {
        return Err(BvpError::Domain {
            what: "t_end",
            value: t_end.to_f64(),
        });
    }
    Ok(run(y0.clone(), w0.clone(), t_end, Stop::Time, params, cfg))
}

/// Integrate from `p0` until the first crossing of `y = event_y`.
///
/// `t_max` bounds the search; trajectories are closed loops, so one period
/// is always enough when the level is reachable at all.
pub fn integrate_to_event<T: Real>(
    p0: &PhasePoint<T>,
    event_y: &T,
    t_max: &T,
    params: &Params<T>,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<T>> {
    check_start(p0, t_max)?;
    cfg.validate()?;
    let r = run(
        p0.y.clone(),
        p0.deficit(),
        t_max,
        Stop::Event(event_y),
        params,
        cfg,
    );
    if let Some(e) = r.failure {
        return Err(e);
    }
    if r.traj.terminal_event.is_none() {
        return Err(BvpError::NoCrossing(event_y.to_f64()));
    }
    Ok(r.traj)
}

fn check_start<T: Real>(p0: &PhasePoint<T>, t_end: &T) -> Result<()> {
    if !p0.y.is_finite_value() || !p0.z.is_finite_value() {
        return Err(BvpError::Domain {
            what: "initial point",
            value: p0.z.to_f64(),
        });
    }
    if !(*t_end > t_end.zero_like()) {
        return Err(BvpError::Domain {
            what: "t_end",
            value: t_end.to_f64(),
        });
    }
    Ok(())
}

/// Which end of the interval carries the singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularEnd {
    Left,
    Right,
    None,
}

/// ∫_a^b f over an interval with at most an inverse-square-root endpoint
/// singularity, by tanh–sinh quadrature.
///
/// The integrand receives `(x, d)` where `d` is the distance from `x` to the
/// singular endpoint (to `a` when there is none), computed without
/// cancellation so the singular factor can be evaluated accurately.
pub fn quad_singular<T, F>(f: F, a: &T, b: &T, end: SingularEnd, tol: f64) -> Result<T>
where
    T: Real,
    F: Fn(&T, &T) -> T,
{
    let half = a.lift(0.5);
    let hw = (b.clone() - a.clone()) * half.clone();
    let width = b.clone() - a.clone();
    let pi_2 = a.pi_like() * half.clone();
    let eps = a.epsilon_like();
    let one = a.one_like();
    let two = a.lift(2.0);

    // contribution of the node pair at parameter t > 0
    let pair = |t: &T| -> Option<T> {
        let u = pi_2.clone() * t.sinh();
        let q = (-two.clone() * u).exp();
        let delta = hw.clone() * two.clone() * q.clone() / (one.clone() + q.clone());
        if delta.is_zero_value() {
            return None;
        }
        let weight = hw.clone() * pi_2.clone() * t.cosh() * a.lift(4.0) * q.clone()
            / (one.clone() + q.clone()).square();
        let xl = a.clone() + delta.clone();
        let xr = b.clone() - delta.clone();
        let (dl, dr) = match end {
            SingularEnd::Left | SingularEnd::None => (delta.clone(), width.clone() - delta.clone()),
            SingularEnd::Right => (width.clone() - delta.clone(), delta.clone()),
        };
        Some(weight * (f(&xl, &dl) + f(&xr, &dr)))
    };

    let mid_d = hw.clone();
    let centre = hw.clone() * pi_2.clone() * f(&(a.clone() + hw.clone()), &mid_d);
    let tmax = 7.0;
    let mut sum = centre;
    let sweep = |sum: &mut T, h: f64, start: usize, stride: usize| {
        let mut j = start;
        loop {
            let t = h * j as f64;
            if t > tmax {
                break;
            }
            match pair(&a.lift(t)) {
                None => break,
                Some(term) => {
                    let small = term.abs() <= eps.clone() * sum.abs() * a.lift(1e-3);
                    *sum += term;
                    if small && t > 1.0 {
                        break;
                    }
                }
            }
            j += stride;
        }
    };
    sweep(&mut sum, 1.0, 1, 1);
    let mut h = 1.0;
    let mut prev = sum.clone() * a.lift(h);
    let max_level = 12 + 2 * (a.precision_digits() / 16) as usize;
    for level in 1..=max_level {
        h *= 0.5;
        sweep(&mut sum, h, 1, 2);
        let est = sum.clone() * a.lift(h);
        let diff = (est.clone() - prev.clone()).abs().to_f64();
        if level >= 3 && (diff <= tol || diff <= 4.0 * eps.to_f64() * est.abs().to_f64()) {
            return Ok(est);
        }
        prev = est;
    }
    Err(BvpError::Quadrature {
        estimate: prev.to_f64(),
        error: f64::NAN,
    })
}
