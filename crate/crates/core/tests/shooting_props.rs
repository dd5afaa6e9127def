use hpreal::HPReal;
use layerbvp::asymptotics::{slope_tst, Branch, CompositeSolution};
use layerbvp::dynamics::Params;
use layerbvp::integrate::IntegratorConfig;
use layerbvp::shooting::{compare, find_branch, scan_target, solution_on_grid, target, EPSILON_C};
use layerbvp::special::f_slope;
use proptest::prelude::*;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::new(1e-12, 1e-13).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solved_branches_satisfy_the_problem(e in 0.06..0.2f64) {
        let p = Params::new(e).unwrap();
        let sols: Vec<_> = Branch::ALL.iter().map(|b| find_branch(*b, &p, &cfg()).unwrap()).collect();
        for s in &sols {
            prop_assert!(s.residual.abs() <= 1e-9, "{} {}", s.branch, s.residual);
            prop_assert!((f_slope(&s.initial_slope) - f_slope(&s.final_slope)).abs() <= 1e-8);
            prop_assert!(!s.merged);
        }
        prop_assert!(sols[0].initial_slope < sols[1].initial_slope);
        prop_assert!(sols[1].initial_slope < sols[2].initial_slope);
        // reversal pairing
        prop_assert!((sols[0].final_slope - sols[2].initial_slope).abs() <= 1e-8);
        prop_assert!((sols[2].final_slope - sols[0].initial_slope).abs() <= 1e-6 * sols[0].initial_slope.abs());
    }

    #[test]
    fn residual_is_final_y_plus_one(s in -20.0..0.999f64) {
        let r = target(&s, &Params::new(0.1).unwrap(), &cfg());
        if !r.saturated {
            prop_assert_eq!(r.residual, r.final_y + 1.0);
        }
    }
}

#[test]
fn scan_is_deterministic_and_ordered() {
    let p = Params::new(0.1).unwrap();
    let a = scan_target(&p, &-12.0, &0.99, 64, &cfg());
    let b = scan_target(&p, &-12.0, &0.99, 64, &cfg());
    assert_eq!(a, b);
    assert_eq!(a.first().unwrap().0, -12.0);
    assert_eq!(a.last().unwrap().0, 0.99);
}

#[test]
fn b1_error_profile_mirrors_b0() {
    let p = Params::new(0.1).unwrap();
    let c = cfg().with_dense(true);
    let e0 = compare(
        &CompositeSolution::new(Branch::B0, 1, &p).unwrap(),
        &find_branch(Branch::B0, &p, &c).unwrap(),
        1001,
    );
    let e1 = compare(
        &CompositeSolution::new(Branch::B1, 1, &p).unwrap(),
        &find_branch(Branch::B1, &p, &c).unwrap(),
        1001,
    );
    for (a, b) in e1.profile.iter().zip(e0.profile.iter().rev()) {
        assert!((a.1 + b.1).abs() < 1e-8, "x = {}", a.0);
    }
}

#[test]
fn m_leading_order_is_uniformly_close_at_one_hundredth() {
    let p = Params::new(0.01).unwrap();
    let sol = find_branch(Branch::M, &p, &cfg().with_dense(true)).unwrap();
    let err = compare(
        &CompositeSolution::new(Branch::M, 0, &p).unwrap(),
        &sol,
        1001,
    );
    assert!(err.max_abs_error < 0.05, "{}", err.max_abs_error);
}

#[test]
fn b0_profile_has_the_layer_at_the_left() {
    let p = Params::new(0.05).unwrap();
    let sol = find_branch(Branch::B0, &p, &cfg().with_dense(true)).unwrap();
    let grid = solution_on_grid(&sol, 101);
    assert!((grid[0].1.y - 1.0).abs() < 1e-12);
    assert!((grid[100].1.y + 1.0).abs() < 1e-9);
    // outer solution y = x - 2 away from the layer
    assert!((grid[50].1.y + 1.5).abs() < 0.05);
}

#[test]
fn merged_above_critical_for_every_tag() {
    let p = Params::new(EPSILON_C + 0.05).unwrap();
    let slopes: Vec<f64> = Branch::ALL
        .iter()
        .map(|b| find_branch(*b, &p, &cfg()).unwrap().initial_slope)
        .collect();
    assert!(slopes.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-9));
}

#[test]
fn extended_precision_b1_slope_at_five_hundredths() {
    let e = HPReal::from_ratio(5, 100, 40);
    let p = Params::new(e).unwrap();
    let sol = find_branch(Branch::B1, &p, &IntegratorConfig::for_digits(40)).unwrap();
    let u = sol.initial_deficit.to_f64();
    assert!((u / 5.028_324_79e-11 - 1.0).abs() < 1e-6, "{u:e}");
    let r = (sol.initial_deficit / slope_tst(Branch::B1, &p).unwrap()).to_f64();
    assert!((r - 1.0).abs() <= 0.25);
}
