use hpreal::HPReal;
use layerbvp::asymptotics::Branch;
use layerbvp::bifurcation::{
    fit_pitchfork, locate_critical, locate_critical_like, residual_grid, roots_at, row_roots,
};
use layerbvp::dynamics::{Params, PhasePoint};
use layerbvp::integrate::{integrate_to_time, IntegratorConfig};
use layerbvp::shooting::{find_branch, EPSILON_C};

fn cfg() -> IntegratorConfig {
    IntegratorConfig::new(1e-12, 1e-13).unwrap()
}

#[test]
fn critical_constants_agree_with_the_shooting_constant() {
    let c = locate_critical().unwrap();
    assert!((c.epsilon_c - EPSILON_C).abs() < 1e-14);
    assert!(2.0 * c.epsilon_c * (c.z_c + (1.0 - c.z_c).ln()) + 1.0 < 1e-14);
}

#[test]
fn critical_point_in_extended_precision() {
    let c = locate_critical_like(&HPReal::zero(30)).unwrap();
    let s = c.epsilon_c.to_string();
    assert!(s.starts_with("2.159869288902900450"), "{s}");
    assert!(c.g_at_root.to_f64().abs() < 1e-25);
}

#[test]
fn critical_trajectory_stays_on_unit_level() {
    let p = Params::new(EPSILON_C).unwrap();
    let tr = integrate_to_time(&PhasePoint::new(1.0, 0.0), &1.0, &p, &cfg()).unwrap();
    for i in 0..tr.len() {
        assert!((tr.c_squared(i) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn grid_rows_are_ordered_and_match_branches() {
    let g = residual_grid((0.16, 0.2), (-6.0, 1.0), 3, 701, &cfg()).unwrap();
    let cells: Vec<_> = g.cells().collect();
    assert_eq!(cells.len(), 3 * 701);
    assert!(cells
        .windows(2)
        .all(|w| w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1)));
    let spacing = 7.0 / 700.0;
    for (i, &e) in g.epsilons.iter().enumerate() {
        let roots = row_roots(&g.slopes, g.row(i));
        assert_eq!(roots.len(), 3, "eps {e}");
        let p = Params::new(e).unwrap();
        for (r, b) in roots.iter().zip(Branch::ALL) {
            let s = find_branch(b, &p, &cfg()).unwrap().initial_slope;
            assert!((r - s).abs() < spacing, "{b} at {e}: {r} vs {s}");
        }
    }
}

#[test]
fn merged_slope_tends_to_zero_from_above() {
    let mut last = f64::INFINITY;
    for d in [1e-2, 1e-3, 1e-4] {
        let roots = roots_at(EPSILON_C + d, (-1.0, 1.0), 201, &cfg()).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].abs() < last);
        last = roots[0].abs();
    }
    assert!(last < 1e-3);
}

#[test]
fn fitted_normal_form_has_positive_coefficients() {
    let g = residual_grid(
        (EPSILON_C - 1e-3, EPSILON_C + 1e-3),
        (-0.3, 0.3),
        11,
        31,
        &cfg(),
    )
    .unwrap();
    let fit = fit_pitchfork(&g, EPSILON_C).unwrap();
    assert!(fit.a > 0.0 && fit.b > 0.0, "{fit:?}");
    assert!((fit.epsilon_c_fit - EPSILON_C).abs() < 1e-3);
}
