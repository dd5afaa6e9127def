//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use hpreal::HPReal;
use layerbvp::asymptotics::{
    b0_c2, slope_b0, slope_tst, slope_tst_transfer, trap_comparison, Branch, CompositeSolution,
};
use layerbvp::bifurcation::{locate_critical, residual_grid};
use layerbvp::dynamics::Params;
use layerbvp::integrate::IntegratorConfig;
use layerbvp::shooting::{compare, find_branch, solution_on_grid, BranchSolution};
use layerbvp::special::{dilog, lambert_w, WBranch};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const DIGITS: u32 = 50;
const SWEEP: [i64; 5] = [10, 8, 6, 5, 4];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::new(1e-12, 1e-13).unwrap()
}

fn f(z: f64) -> f64 {
    z + (1.0 - z).ln()
}

/// Least-squares slope of y on x.
fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Sign-change roots of a sampled row by linear interpolation.
fn crossings(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    (0..xs.len() - 1)
        .filter(|&i| (ys[i] > 0.0) != (ys[i + 1] > 0.0))
        .map(|i| xs[i] - ys[i] * (xs[i + 1] - xs[i]) / (ys[i + 1] - ys[i]))
        .collect()
}

fn dilog_simpson(x: f64) -> f64 {
    let n = 20_000;
    let h = 1.0 / n as f64;
    let g = |u: f64| if u == 0.0 { x } else { -(-x * u).ln_1p() / u };
    let mut s = g(0.0) + g(1.0);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn tenth_branches() -> Vec<BranchSolution<f64>> {
    let p = Params::new(0.1).unwrap();
    Branch::ALL
        .iter()
        .map(|b| find_branch(*b, &p, &cfg().with_dense(true)).unwrap())
        .collect()
}

fn c1_critical_point() -> Outcome {
    let t0 = Instant::now();
    let c = locate_critical().unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let pass = (c.epsilon_c - 0.215_986_928_890_3).abs() <= 1e-9
        && (c.z_c + 3.905_263_770_3).abs() <= 1e-8
        && secs < 10.0;
    outcome(
        pass,
        format!(
            "eps_c = {:.15}, z_c = {:.12}, {secs:.2} s",
            c.epsilon_c, c.z_c
        ),
    )
}

fn c2_slopes_at_tenth() -> Outcome {
    let t0 = Instant::now();
    let p = Params::new(0.1).unwrap();
    let b0 = find_branch(Branch::B0, &p, &cfg()).unwrap().initial_slope;
    let b1 = find_branch(Branch::B1, &p, &cfg()).unwrap().initial_slope;
    let secs = t0.elapsed().as_secs_f64();
    let pass = (b0 + 10.6942).abs() <= 5e-4 && (b1 - 0.9999).abs() < 5e-5 && secs < 5.0;
    outcome(pass, format!("B0 {b0:.6}, B1 {b1:.8}, {secs:.2} s"))
}

/// Ratios and log10 deficits for the extended-precision sweep.
fn tst_sweep(branch: Branch) -> (Vec<f64>, Vec<f64>, f64) {
    let t0 = Instant::now();
    let cfg = IntegratorConfig::for_digits(DIGITS);
    let mut ratios = Vec::new();
    let mut logs = Vec::new();
    for h in SWEEP {
        let p = Params::new(HPReal::from_ratio(h, 100, DIGITS)).unwrap();
        let sol = find_branch(branch, &p, &cfg).unwrap();
        let law = slope_tst(branch, &p).unwrap();
        ratios.push((sol.initial_deficit.clone() / law).to_f64());
        logs.push(sol.initial_deficit.ln().to_f64() / std::f64::consts::LN_10);
    }
    (ratios, logs, t0.elapsed().as_secs_f64())
}

fn band_and_trend(ratios: &[f64]) -> (bool, bool) {
    let band = ratios
        .iter()
        .zip(SWEEP)
        .all(|(r, h)| (r - 1.0).abs() <= 5.0 * h as f64 / 100.0);
    let trend = ratios
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
    (band, trend)
}

fn show(v: &[f64]) -> String {
    v.iter()
        .map(|r| format!("{r:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn c3_tst_b1() -> Outcome {
    let (ratios, logs, secs) = tst_sweep(Branch::B1);
    let (band, trend) = band_and_trend(&ratios);
    let span = logs[0] - logs[logs.len() - 1];
    let pass = band && trend && span >= 10.0 && secs < 600.0;
    outcome(
        pass,
        format!("ratios {}; in band {band}, decreasing {trend}; span {span:.2} decades (need 10); {secs:.0} s", show(&ratios)),
    )
}

fn c4_tst_m() -> Outcome {
    let (ratios, _, secs) = tst_sweep(Branch::M);
    let (band, trend) = band_and_trend(&ratios);
    outcome(
        band && trend && secs < 600.0,
        format!(
            "ratios {}; in band {band}, decreasing {trend}; {secs:.0} s",
            show(&ratios)
        ),
    )
}

fn c5_b0_formula() -> Outcome {
    let gap = |e: f64| {
        let p = Params::new(e).unwrap();
        (find_branch(Branch::B0, &p, &cfg()).unwrap().initial_slope - slope_b0(&p)).abs()
    };
    let (g1, g2) = (gap(0.1), gap(0.05));
    let r = g1 / g2;
    outcome(
        (1.6..=2.6).contains(&r),
        format!("gap {g1:.5} -> {g2:.5}, reduction {r:.3}"),
    )
}

fn c6_composite_scaling() -> Outcome {
    let mut pts = Vec::new();
    let mut errs = Vec::new();
    for e in [0.1, 0.05, 0.025] {
        let p = Params::new(e).unwrap();
        let sol = find_branch(Branch::B0, &p, &cfg().with_dense(true)).unwrap();
        let err = compare(
            &CompositeSolution::new(Branch::B0, 1, &p).unwrap(),
            &sol,
            1001,
        )
        .max_abs_error;
        errs.push(err);
        pts.push((e.ln(), err.ln()));
    }
    let pw = fit_slope(&pts);
    outcome(
        (1.8..=2.2).contains(&pw),
        format!(
            "max errors {:.3e} {:.3e} {:.3e}; fitted exponent {pw:.3}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn c7_pitchfork() -> Outcome {
    let ec = locate_critical().unwrap().epsilon_c;
    let count = |e: f64| {
        let g = residual_grid((e, e), (-1.5, 1.5), 2, 1201, &cfg()).unwrap();
        crossings(&g.slopes, g.row(0)).len()
    };
    let (below, above) = (count(ec - 1e-3), count(ec + 1e-3));
    let g = residual_grid((ec - 4e-3, ec - 2.5e-4), (-1.5, 1.5), 16, 3001, &cfg()).unwrap();
    let mut pts = Vec::new();
    for (i, e) in g.epsilons.iter().enumerate() {
        let r = crossings(&g.slopes, g.row(i));
        if r.len() == 3 {
            pts.push(((ec - e).ln(), (r[2] - r[0]).ln()));
        }
    }
    let p = if pts.len() >= 2 {
        fit_slope(&pts)
    } else {
        f64::NAN
    };
    let pass = below == 3 && above == 1 && pts.len() == 16 && (p - 0.5).abs() <= 0.1;
    outcome(
        pass,
        format!(
            "{below} roots below, {above} above; separation exponent {p:.4} from {} rows",
            pts.len()
        ),
    )
}

fn c8_drift(sols: &[BranchSolution<f64>]) -> Outcome {
    let worst = sols
        .iter()
        .map(|s| s.trajectory.max_conserved_drift())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("max |C^2(t) - C^2(0)| = {worst:.2e}"),
    )
}

fn c9_endpoints(sols: &[BranchSolution<f64>]) -> Outcome {
    let worst = sols
        .iter()
        .map(|s| (f(s.initial_slope) - f(s.final_slope)).abs())
        .fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("max |f(z0) - f(z1)| = {worst:.2e}"))
}

fn c10_symmetry(sols: &[BranchSolution<f64>]) -> Outcome {
    let g0 = solution_on_grid(&sols[0], 2001);
    let g1 = solution_on_grid(&sols[2], 2001);
    let worst = g1
        .iter()
        .zip(g0.iter().rev())
        .map(|(a, b)| (a.1.y + b.1.y).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-8,
        format!("max |y_B1(x) + y_B0(1-x)| = {worst:.2e}"),
    )
}

fn c11_special() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let e_inv = (-1.0f64).exp();
    let mut w_worst = 0.0f64;
    for i in 0..10_000 {
        let (x, b) = if i % 2 == 0 {
            (rng.gen_range(-e_inv..20.0), WBranch::Principal)
        } else {
            (rng.gen_range(-e_inv..0.0), WBranch::Lower)
        };
        if x == 0.0 {
            continue;
        }
        let w = lambert_w(&x, b).unwrap();
        w_worst = w_worst.max(((w * w.exp() - x) / x).abs());
    }
    let mut li_worst = 0.0f64;
    for i in 0..=118 {
        let x = -5.0 + 5.9 * i as f64 / 118.0;
        li_worst = li_worst.max((dilog(&x).unwrap() - dilog_simpson(x)).abs());
    }
    let c2 = b0_c2(&0.0);
    let pass = w_worst <= 1e-14 && li_worst <= 1e-12 && (c2 - 2.594).abs() <= 5e-4;
    outcome(
        pass,
        format!("W residual {w_worst:.2e}, Li2 vs quadrature {li_worst:.2e}, c2 = {c2:.6}"),
    )
}

fn c12_trap(m_passed: bool) -> Outcome {
    let p = Params::new(0.05).unwrap();
    let t = trap_comparison(&p).unwrap();
    let naive_ratio = t.naive / t.transfer;
    let numeric = find_branch(Branch::M, &p, &cfg()).unwrap().initial_deficit;
    let transfer_ratio = slope_tst_transfer(Branch::M, &p).unwrap() / numeric;
    let pass = !(0.5..=2.0).contains(&naive_ratio)
        && (transfer_ratio - 1.0).abs() <= 5.0 * 0.05
        && m_passed;
    outcome(
        pass,
        format!("naive/transfer {naive_ratio:.4}; transfer/numeric {transfer_ratio:.4}; M law criterion passed {m_passed}"),
    )
}

fn main() -> ExitCode {
    let sols = tenth_branches();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!(
            "criterion {n:>2} {} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };
    report(1, "critical point", c1_critical_point());
    report(2, "slopes at eps = 0.1", c2_slopes_at_tenth());
    report(3, "B1 transcendental slope law", c3_tst_b1());
    let c4 = c4_tst_m();
    let m_passed = c4.pass;
    report(4, "M transcendental slope law", c4);
    report(5, "B0 slope formula error O(eps)", c5_b0_formula());
    report(6, "B0 composite error ~ eps^2", c6_composite_scaling());
    report(7, "pitchfork structure", c7_pitchfork());
    report(8, "conserved drift", c8_drift(&sols));
    report(9, "endpoint slope relation", c9_endpoints(&sols));
    report(10, "B0/B1 symmetry", c10_symmetry(&sols));
    report(11, "special functions", c11_special());
    report(12, "naive M slope trap", c12_trap(m_passed));
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.2.pass)
        .map(|r| r.0.to_string())
        .collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
