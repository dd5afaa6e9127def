use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hpreal::{HPReal, PrecisionConfig, Real};

use layerbvp::asymptotics::{write_composite_csv, Branch, CompositeSolution};
use layerbvp::bifurcation::{fit_pitchfork, locate_critical, locate_critical_like, residual_grid};
use layerbvp::dynamics::Params;
use layerbvp::integrate::IntegratorConfig;
use layerbvp::shooting::{
    compare, find_branch, scan_target, slope_sweep, write_scan_csv, write_slopes_csv,
    write_solution_csv, BranchSolution, EPSILON_C,
};
use layerbvp::verify::{self, Suite, VerifyOptions};
use layerbvp::BvpError;

/// Default working precision (decimal digits) when --precision is absent.
const DIGITS_ENV: &str = "LAYERBVP_DIGITS";

#[derive(Parser, Debug)]
#[command(
    name = "layerbvp",
    version,
    about = "Boundary layers, shooting and the pitchfork of eps*y'' = y*y' - y"
)]
struct Cli {
    /// Relative tolerance for machine-precision integrations.
    #[arg(long, global = true, default_value_t = 1e-12)]
    rel_tol: f64,
    /// Absolute tolerance for machine-precision integrations.
    #[arg(long, global = true, default_value_t = 1e-13)]
    abs_tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solution curves: numerical (with phase-plane data) or composite.
    Solve(SolveArgs),
    /// Composite-minus-numerical error profiles.
    Error(ErrorArgs),
    /// Initial slopes of all branches against their asymptotic laws.
    Slopes(SlopesArgs),
    /// The target function y(1) + 1 against the trial slope.
    Scan(ScanArgs),
    /// Critical point of the pitchfork, or the residual grid around it.
    Bifurcation(BifurcationArgs),
    /// Run the self-check table.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BranchArg {
    B0,
    M,
    B1,
    All,
}

impl BranchArg {
    fn branches(self) -> Vec<Branch> {
        match self {
            BranchArg::B0 => vec![Branch::B0],
            BranchArg::M => vec![Branch::M],
            BranchArg::B1 => vec![Branch::B1],
            BranchArg::All => Branch::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OrderArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "1")]
    One,
    Numeric,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    epsilon: String,
    #[arg(long, value_enum)]
    branch: BranchArg,
    #[arg(long, value_enum, default_value = "numeric")]
    order: OrderArg,
    /// Grid points on [0, 1].
    #[arg(long, default_value_t = 1001)]
    points: usize,
    /// Working digits; 16 or less means machine precision.
    #[arg(long)]
    precision: Option<u32>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ErrorArgs {
    /// One or more ε values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    epsilon: Vec<f64>,
    #[arg(long, value_enum)]
    branch: BranchArg,
    #[arg(long, value_enum, default_value = "1")]
    order: OrderArg,
    #[arg(long, default_value_t = 1001)]
    points: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SlopesArgs {
    #[arg(long, allow_hyphen_values = true)]
    eps_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    eps_max: f64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Working digits; defaults to $LAYERBVP_DIGITS, then 50.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    epsilon: f64,
    #[arg(long, allow_hyphen_values = true)]
    slope_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    slope_max: f64,
    #[arg(long, default_value_t = 401)]
    count: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BifurcationArgs {
    #[command(subcommand)]
    action: BifurcationAction,
}

#[derive(Subcommand, Debug)]
enum BifurcationAction {
    /// Solve for (z_c, ε_c) and write them as JSON.
    Locate {
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Residual grid over (ε, y'(0)); --window zooms onto the critical point.
    Grid {
        #[arg(long)]
        window: bool,
        #[arg(long)]
        eps_min: Option<f64>,
        #[arg(long)]
        eps_max: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        slope_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        slope_max: Option<f64>,
        #[arg(long, default_value_t = 121)]
        n_eps: usize,
        #[arg(long, default_value_t = 121)]
        n_slope: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Fast,
    Full,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    suite: SuiteArg,
    #[arg(long)]
    precision: Option<u32>,
    /// Offset added to the M inner constant c1 (negative control).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    perturb_c1: f64,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Invalid(String),
    Internal(String),
}

impl From<BvpError> for Failure {
    fn from(e: BvpError) -> Self {
        match e {
            BvpError::BadEpsilon(_)
            | BvpError::Domain { .. }
            | BvpError::NoBranch(..)
            | BvpError::InvalidBranch(_)
            | BvpError::NotBracketed { .. } => Failure::Invalid(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn invalid<T>(msg: impl Into<String>) -> std::result::Result<T, Failure> {
    Err(Failure::Invalid(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let cfg = IntegratorConfig::new(cli.rel_tol, cli.abs_tol)?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, &cfg),
        Command::Error(a) => cmd_error(a, &cfg),
        Command::Slopes(a) => cmd_slopes(a, &cfg),
        Command::Scan(a) => cmd_scan(a, &cfg),
        Command::Bifurcation(a) => cmd_bifurcation(a, &cfg),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Precision from the flag, else the environment, else 50 digits.
fn digits(flag: Option<u32>) -> std::result::Result<u32, Failure> {
    let d = match flag {
        Some(d) => d,
        None => match std::env::var(DIGITS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::Invalid(format!("{DIGITS_ENV}={v} is not a digit count")))?,
            Err(_) => PrecisionConfig::DEFAULT_DIGITS,
        },
    };
    if d > 1000 {
        return invalid(format!("precision {d} exceeds 1000 digits"));
    }
    Ok(d)
}

fn create(dir: &Path, name: &str) -> std::result::Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f =
        File::create(&path).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))?;
    eprintln!("writing {}", path.display());
    Ok(BufWriter::new(f))
}

fn check_branch_exists(branch: Branch, epsilon: f64) -> Outcome {
    if branch != Branch::M && epsilon >= EPSILON_C {
        return invalid(format!(
            "branch {branch} does not exist for epsilon = {epsilon} >= {EPSILON_C}; only the merged solution (m) remains"
        ));
    }
    Ok(())
}

fn positive_count(name: &str, n: usize, min: usize) -> Outcome {
    if n < min {
        return invalid(format!("--{name} must be at least {min}"));
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs, cfg: &IntegratorConfig) -> Outcome {
    positive_count("points", a.points, 2)?;
    let e64: f64 = a
        .epsilon
        .trim()
        .parse()
        .map_err(|_| Failure::Invalid(format!("bad --epsilon {}", a.epsilon)))?;
    Params::new(e64)?;
    let branches = a.branch.branches();
    if a.branch != BranchArg::All {
        check_branch_exists(branches[0], e64)?;
    }
    // flags may leave precision unset: solve defaults to machine precision
    let d = match a.precision {
        Some(d) => digits(Some(d))?,
        None => 16,
    };
    if d <= 16 {
        solve_in(&0.0f64, a, &branches, cfg)
    } else {
        let like = HPReal::zero(d);
        let hp_cfg = IntegratorConfig::for_digits(d).with_dense(true);
        solve_in(&like, a, &branches, &hp_cfg)
    }
}

fn solve_in<T: Real>(
    like: &T,
    a: &SolveArgs,
    branches: &[Branch],
    cfg: &IntegratorConfig,
) -> Outcome {
    let eps = like
        .parse_like(&a.epsilon)
        .ok_or_else(|| Failure::Invalid(format!("bad --epsilon {}", a.epsilon)))?;
    let params = Params::new(eps)?;
    for &b in branches {
        if a.branch == BranchArg::All && b != Branch::M && params.epsilon().to_f64() >= EPSILON_C {
            eprintln!("skipping {b}: merged above the critical epsilon");
            continue;
        }
        let tag = b.to_string().to_lowercase();
        match a.order {
            OrderArg::Numeric => {
                let sol = find_branch(b, &params, &cfg.clone().with_dense(true))?;
                write_solution_csv(
                    &sol,
                    a.points,
                    create(&a.out, &format!("solution_{tag}.csv"))?,
                )?;
                write_phase_csv(&sol, create(&a.out, &format!("phase_{tag}.csv"))?)?;
            }
            OrderArg::Zero | OrderArg::One => {
                let order = if a.order == OrderArg::One { 1 } else { 0 };
                let cs = CompositeSolution::new(b, order, &params)?;
                write_composite_csv(
                    &cs,
                    a.points,
                    create(&a.out, &format!("composite_{tag}_order{order}.csv"))?,
                )?;
            }
        }
    }
    Ok(())
}

/// The solved trajectory in the phase plane, at the integrator's own steps.
fn write_phase_csv<T: Real, W: Write>(sol: &BranchSolution<T>, mut out: W) -> Outcome {
    writeln!(
        out,
        "# phase plane, branch = {}, epsilon = {}",
        sol.branch, sol.epsilon
    )?;
    writeln!(out, "y,z")?;
    let tr = &sol.trajectory;
    for i in 0..tr.len() {
        let p = tr.point(i);
        writeln!(out, "{},{}", p.y, p.z)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_error(a: &ErrorArgs, cfg: &IntegratorConfig) -> Outcome {
    positive_count("points", a.points, 2)?;
    let order = match a.order {
        OrderArg::Zero => 0,
        OrderArg::One => 1,
        OrderArg::Numeric => return invalid("--order must be 0 or 1 for error profiles"),
    };
    for &e in &a.epsilon {
        let params = Params::new(e)?;
        for b in a.branch.branches() {
            check_branch_exists(b, e)?;
            let sol = find_branch(b, &params, &cfg.clone().with_dense(true))?;
            let err = compare(&CompositeSolution::new(b, order, &params)?, &sol, a.points);
            let tag = b.to_string().to_lowercase();
            let mut w = create(&a.out, &format!("error_{tag}_order{order}_eps{e}.csv"))?;
            writeln!(
                w,
                "# branch = {b}, order = {order}, epsilon = {e}, max_abs_error = {:e}",
                err.max_abs_error
            )?;
            writeln!(w, "x,error")?;
            for (x, d) in &err.profile {
                writeln!(w, "{x},{d}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_slopes(a: &SlopesArgs, cfg: &IntegratorConfig) -> Outcome {
    positive_count("count", a.count, 1)?;
    if !(a.eps_min > 0.0 && a.eps_max >= a.eps_min) {
        return invalid("need 0 < --eps-min <= --eps-max");
    }
    if a.eps_max >= EPSILON_C {
        return invalid(format!(
            "three branches exist only below epsilon = {EPSILON_C}"
        ));
    }
    let d = digits(a.precision)?;
    let grid: Vec<f64> = if a.count == 1 {
        vec![a.eps_min]
    } else {
        (0..a.count)
            .map(|i| a.eps_max - (a.eps_max - a.eps_min) * i as f64 / (a.count - 1) as f64)
            .collect()
    };
    let mut w = create(&a.out, "slopes.csv")?;
    writeln!(w, "# precision = {d} digits")?;
    if d <= 16 {
        let rows = collect_rows(slope_sweep(&grid, cfg))?;
        write_slopes_csv(&rows, w)?;
    } else {
        // spaced in the working precision so 0.06 means 0.06
        let like = HPReal::zero(d);
        let lo = like.parse_like(&a.eps_min.to_string()).expect("finite");
        let hi = like.parse_like(&a.eps_max.to_string()).expect("finite");
        let eps: Vec<HPReal> = if a.count == 1 {
            vec![lo]
        } else {
            (0..a.count)
                .map(|i| {
                    hi.clone()
                        - (hi.clone() - lo.clone()) * like.ratio(i as i64, (a.count - 1) as i64)
                })
                .collect()
        };
        let rows = collect_rows(slope_sweep(&eps, &IntegratorConfig::for_digits(d)))?;
        write_slopes_csv(&rows, w)?;
    }
    Ok(())
}

fn collect_rows<R>(rows: Vec<layerbvp::Result<R>>) -> std::result::Result<Vec<R>, Failure> {
    rows.into_iter().map(|r| r.map_err(Failure::from)).collect()
}

fn cmd_scan(a: &ScanArgs, cfg: &IntegratorConfig) -> Outcome {
    positive_count("count", a.count, 2)?;
    if !(a.slope_max >= a.slope_min) {
        return invalid("need --slope-min <= --slope-max");
    }
    let params = Params::new(a.epsilon)?;
    let rows = scan_target(&params, &a.slope_min, &a.slope_max, a.count, cfg);
    write_scan_csv(
        &rows,
        &a.epsilon,
        create(&a.out, &format!("scan_eps{}.csv", a.epsilon))?,
    )?;
    Ok(())
}

fn cmd_bifurcation(a: &BifurcationArgs, cfg: &IntegratorConfig) -> Outcome {
    match &a.action {
        BifurcationAction::Locate { precision, out } => {
            let d = match precision {
                Some(d) => digits(Some(*d))?,
                None => 16,
            };
            let json = if d <= 16 {
                locate_critical()?.to_json()
            } else {
                locate_critical_like(&HPReal::zero(d))?.to_json()
            };
            let mut w = create(out, "critical.json")?;
            writeln!(w, "{json}")?;
            w.flush()?;
            println!("{json}");
            Ok(())
        }
        BifurcationAction::Grid {
            window,
            eps_min,
            eps_max,
            slope_min,
            slope_max,
            n_eps,
            n_slope,
            out,
        } => {
            positive_count("n-eps", *n_eps, 2)?;
            positive_count("n-slope", *n_slope, 2)?;
            let (de, ds, e0, s0) = if *window {
                (5e-6, 0.06, EPSILON_C, 0.0)
            } else {
                (0.0, 0.0, 0.0, 0.0)
            };
            let eps_range = (
                eps_min.unwrap_or(if *window { e0 - de } else { 0.15 }),
                eps_max.unwrap_or(if *window { e0 + de } else { 0.30 }),
            );
            let slope_range = (
                slope_min.unwrap_or(if *window { s0 - ds } else { -4.0 }),
                slope_max.unwrap_or(if *window { s0 + ds } else { 1.0 }),
            );
            let grid = residual_grid(eps_range, slope_range, *n_eps, *n_slope, cfg)?;
            let name = if *window {
                "grid_window.csv"
            } else {
                "grid.csv"
            };
            grid.write_csv(cfg, create(out, name)?)?;
            if *window {
                match fit_pitchfork(&grid, EPSILON_C) {
                    Ok(fit) => {
                        let v = serde_json::json!({
                            "A": fit.a,
                            "B": fit.b,
                            "epsilon_c_fit": fit.epsilon_c_fit,
                            "epsilon_ref": fit.epsilon_ref,
                            "coefficients": fit.coefficients,
                            "rms_residual": fit.rms_residual,
                        });
                        let mut w = create(out, "pitchfork_fit.json")?;
                        writeln!(
                            w,
                            "{}",
                            serde_json::to_string_pretty(&v).expect("numbers serialize")
                        )?;
                        w.flush()?;
                    }
                    Err(e) => eprintln!("pitchfork fit skipped: {e}"),
                }
            }
            Ok(())
        }
    }
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let opts = VerifyOptions {
        suite: match a.suite {
            SuiteArg::Fast => Suite::Fast,
            SuiteArg::Full => Suite::Full,
        },
        digits: digits(a.precision)?,
        m_c1_offset: a.perturb_c1,
    };
    let checks = verify::run(&opts);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for c in &checks {
        writeln!(out, "{c}")?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(out, "{} checks, {} failed", checks.len(), failed)?;
    if failed > 0 {
        return Err(Failure::Internal(format!("{failed} check(s) failed")));
    }
    Ok(())
}
