//! The pitchfork where B0, M and B1 merge.
//!
//! The critical trajectory leaves (1, 0), reaches its lowest slope `z_c` at
//! y = 0 half way across, and lies on the level set C² = 1. The level set
//! fixes ε in terms of `z_c`; the half-way travel time fixes `z_c`.

use std::io::Write;

use hpreal::Real;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dynamics::{Params, PhasePoint};
use crate::error::{BvpError, Result};
use crate::integrate::{csv_err, integrate_to_time, quad_singular, IntegratorConfig, SingularEnd};
use crate::roots::{brent, brent_with_values};
use crate::shooting::target;
use crate::special::f_slope;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint<T> {
    pub z_c: T,
    pub epsilon_c: T,
    pub g_at_root: T,
    /// Cross-check: shooting from (1, 0) at ε_c for unit time.
    pub check_final_y: T,
    pub check_final_z: T,
    pub check_conserved_drift: T,
}

impl<T: Real> CriticalPoint<T> {
    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "z_c": self.z_c.to_string(),
            "epsilon_c": self.epsilon_c.to_string(),
            "g_at_root": self.g_at_root.to_string(),
            "cross_check": {
                "final_y": self.check_final_y.to_string(),
                "final_z": self.check_final_z.to_string(),
                "max_conserved_drift": self.check_conserved_drift.to_string(),
            },
            "precision_digits": self.z_c.precision_digits(),
        });
        serde_json::to_string_pretty(&v).expect("plain strings serialize")
    }
}

/// ε for which the level set C² = 1 passes through (0, z_c).
pub fn eps_from_zc<T: Real>(z_c: &T) -> Result<T> {
    if !(*z_c < z_c.zero_like()) {
        return Err(BvpError::Domain {
            what: "eps_from_zc",
            value: z_c.to_f64(),
        });
    }
    Ok(-z_c.one_like() / (z_c.lift(2.0) * f_slope(z_c)))
}

/// Combined critical condition; zero at the true `z_c`.
pub fn g<T: Real>(z_c: &T) -> Result<T> {
    if !(*z_c < z_c.zero_like()) {
        return Err(BvpError::Domain {
            what: "g",
            value: z_c.to_f64(),
        });
    }
    let fc = f_slope(z_c);
    let one = z_c.one_like();
    let r = one.clone() / (one.clone() - z_c.clone());
    // with d = z - z_c: f(z) - f(z_c) = d + ln(1 - d/(1 - z_c))
    let integrand = |z: &T, d: &T| {
        let rise = d.clone() + (-(d.clone() * r.clone())).ln_1p();
        one.clone() / ((one.clone() - z.clone()) * (rise / -fc.clone()).sqrt())
    };
    let tol = (z_c.epsilon_like().to_f64() * 16.0).max(1e-15);
    let integral = quad_singular(integrand, z_c, &z_c.zero_like(), SingularEnd::Left, tol)?;
    Ok(fc + integral)
}

/// Root of `g` in [-20, -0.5] (f64).
pub fn locate_critical() -> Result<CriticalPoint<f64>> {
    locate_critical_like(&0.0)
}

/// Root of `g` in [-20, -0.5] at the precision of `like`.
pub fn locate_critical_like<T: Real>(like: &T) -> Result<CriticalPoint<T>> {
    let lo = like.lift(-20.0);
    let hi = like.lift(-0.5);
    let xtol = like.epsilon_like() * like.lift(64.0);
    let mut first_err = None;
    let mut h = |z: &T| match g(z) {
        Ok(v) => v,
        Err(e) => {
            first_err.get_or_insert(e);
            like.zero_like()
        }
    };
    let z_c = brent(&mut h, lo, hi, xtol, 300)?;
    if let Some(e) = first_err {
        return Err(e);
    }
    let epsilon_c = eps_from_zc(&z_c)?;
    let params = Params::new(epsilon_c.clone())?;
    let tol = like.epsilon_like().to_f64().max(1e-13) * 10.0;
    let cfg = IntegratorConfig::new(tol, tol)?.with_dense(false);
    let tr = integrate_to_time(
        &PhasePoint::new(like.one_like(), like.zero_like()),
        &like.one_like(),
        &params,
        &cfg,
    )?;
    let fp = tr.final_point();
    Ok(CriticalPoint {
        g_at_root: g(&z_c)?,
        z_c,
        epsilon_c,
        check_final_y: fp.y,
        check_final_z: fp.z,
        check_conserved_drift: tr.max_conserved_drift(),
    })
}

/// Target residuals on a rectangular (ε, s) grid, row-major by ε.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualGrid {
    pub epsilons: Vec<f64>,
    pub slopes: Vec<f64>,
    pub values: Vec<f64>,
}

impl ResidualGrid {
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.slopes.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.slopes.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &r)| (self.epsilons[k / n], self.slopes[k % n], r))
    }

    pub fn write_csv<W: Write>(&self, cfg: &IntegratorConfig, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# residual grid: {} x {} cells, rel_tol = {:e}, abs_tol = {:e}",
            self.epsilons.len(),
            self.slopes.len(),
            cfg.rel_tol,
            cfg.abs_tol
        )?;
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["epsilon", "slope", "residual"])
            .map_err(csv_err)?;
        for (e, s, r) in self.cells() {
            wr.write_record([fmt(e), fmt(s), fmt(r)]).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluate the target on an `n_eps` x `n_slope` grid. Cells run in
/// parallel.
pub fn residual_grid(
    eps_range: (f64, f64),
    slope_range: (f64, f64),
    n_eps: usize,
    n_slope: usize,
    cfg: &IntegratorConfig,
) -> Result<ResidualGrid> {
    if n_eps < 2 || n_slope < 2 {
        return Err(BvpError::Domain {
            what: "residual_grid count",
            value: n_eps.min(n_slope) as f64,
        });
    }
    if !(eps_range.0 > 0.0) || !(eps_range.1 >= eps_range.0) || !(slope_range.1 >= slope_range.0) {
        return Err(BvpError::Domain {
            what: "residual_grid range",
            value: eps_range.0,
        });
    }
    let epsilons = linspace(eps_range.0, eps_range.1, n_eps);
    let slopes = linspace(slope_range.0, slope_range.1, n_slope);
    let sparse = cfg.clone().with_dense(false);
    let values = (0..n_eps * n_slope)
        .into_par_iter()
        .map(|k| {
            let params = Params::new(epsilons[k / n_slope]).expect("positive ε");
            target(&slopes[k % n_slope], &params, &sparse).residual
        })
        .collect();
    Ok(ResidualGrid {
        epsilons,
        slopes,
        values,
    })
}

/// Zeros of the residual along a sampled row, by linear interpolation
/// between sign changes.
pub fn row_roots(slopes: &[f64], values: &[f64]) -> Vec<f64> {
    crate::roots::sign_changes(values)
        .into_iter()
        .map(|i| {
            let (s0, s1, r0, r1) = (slopes[i], slopes[i + 1], values[i], values[i + 1]);
            s0 - r0 * (s1 - s0) / (r1 - r0)
        })
        .collect()
}

/// Zeros of the target in `slope_range` at one ε: scanned on `n` points,
/// then polished.
pub fn roots_at(
    epsilon: f64,
    slope_range: (f64, f64),
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let params = Params::new(epsilon)?;
    let sparse = cfg.clone().with_dense(false);
    let slopes = linspace(slope_range.0, slope_range.1, n.max(2));
    let values: Vec<f64> = slopes
        .par_iter()
        .map(|s| target(s, &params, &sparse).residual)
        .collect();
    crate::roots::sign_changes(&values)
        .into_iter()
        .map(|i| {
            let mut f = |s: &f64| target(s, &params, &sparse).residual;
            brent_with_values(
                &mut f,
                slopes[i],
                values[i],
                slopes[i + 1],
                values[i + 1],
                1e-13,
                200,
            )
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Separation {
    /// (ε_c - ε, outer-root separation)
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
}

/// Fit `separation ∝ (ε_c - ε)^p` for the outer pair of roots.
pub fn separation_exponent(
    epsilon_c: f64,
    deltas: &[f64],
    slope_range: (f64, f64),
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<Separation> {
    let mut points = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let roots = roots_at(epsilon_c - d, slope_range, n, cfg)?;
        if roots.len() < 2 {
            return Err(BvpError::Fit(format!(
                "{} root(s) at ε_c - {d:e}",
                roots.len()
            )));
        }
        points.push((d, roots[roots.len() - 1] - roots[0]));
    }
    if points.len() < 2 {
        return Err(BvpError::Fit("need at least two offsets".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|(d, s)| (d.ln(), s.ln())).unzip();
    let exponent = ls_slope(&xs, &ys);
    Ok(Separation { points, exponent })
}

/// Slope of the least-squares line through `(x, y)`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchforkFit {
    pub a: f64,
    pub b: f64,
    pub epsilon_c_fit: f64,
    pub epsilon_ref: f64,
    /// [s³, (ε-ε_ref)s, s, s², 1, ε-ε_ref]
    pub coefficients: [f64; 6],
    pub rms_residual: f64,
}

/// Least-squares fit of residual ≈ A s³ + B (ε - ε_ref) s plus the lower
/// order terms that break the symmetry. `epsilon_c_fit` is where the linear
/// coefficient in s changes sign.
pub fn fit_pitchfork(grid: &ResidualGrid, epsilon_ref: f64) -> Result<PitchforkFit> {
    let cells: Vec<_> = grid
        .cells()
        .filter(|c| c.2.is_finite() && c.2.abs() < 1e5)
        .collect();
    let m = cells.len();
    if m < 12 {
        return Err(BvpError::Fit(format!("only {m} usable cells")));
    }
    let basis = |e: f64, s: f64| {
        let de = e - epsilon_ref;
        [s * s * s, de * s, s, s * s, 1.0, de]
    };
    let mut a = DMatrix::<f64>::zeros(m, 6);
    let rhs = DVector::from_iterator(m, cells.iter().map(|c| c.2));
    for (i, &(e, s, _)) in cells.iter().enumerate() {
        for (j, v) in basis(e, s).into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let scale: Vec<f64> = (0..6).map(|j| a.column(j).norm()).collect();
    if scale.iter().any(|&n| !(n > 0.0)) {
        return Err(BvpError::Fit("window does not span both ε and s".into()));
    }
    for (j, &n) in scale.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = a.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    if !(smin > 1e-10 * smax) {
        return Err(BvpError::Fit(format!(
            "ill-conditioned window (singular values {smin:e} / {smax:e})"
        )));
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| BvpError::Fit(e.to_string()))?;
    let resid = &a * &x - &rhs;
    let mut coefficients = [0.0; 6];
    for j in 0..6 {
        coefficients[j] = x[j] / scale[j];
    }
    let [ca, cb, cs, ..] = coefficients;
    Ok(PitchforkFit {
        a: ca,
        b: cb,
        epsilon_c_fit: epsilon_ref - cs / cb,
        epsilon_ref,
        coefficients,
        rms_residual: (resid.norm_squared() / m as f64).sqrt(),
    })
}
