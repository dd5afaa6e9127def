use layerbvp::dynamics::{Params, PhasePoint};
use layerbvp::integrate::{
    integrate_to_event, integrate_to_time, quad_singular, IntegratorConfig, SingularEnd,
};
use proptest::prelude::*;

fn cfg() -> IntegratorConfig {
    IntegratorConfig::new(1e-12, 1e-13).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn invariant_line_is_followed_exactly(y0 in -3.0..3.0f64, t in 0.1..2.0f64, e in 0.02..1.0f64) {
        // z = 1 is invariant and y grows linearly on it
        let tr = integrate_to_time(&PhasePoint::new(y0, 1.0), &t, &Params::new(e).unwrap(), &cfg()).unwrap();
        let f = tr.final_point();
        prop_assert_eq!(f.z, 1.0);
        prop_assert!((f.y - (y0 + t)).abs() <= 1e-13 * (1.0 + y0.abs() + t));
    }

    #[test]
    fn dense_output_matches_restart(z0 in -12.0..0.9f64, frac in 0.05..0.95f64) {
        let p = Params::new(0.1).unwrap();
        let tr = integrate_to_time(&PhasePoint::new(1.0, z0), &1.0, &p, &cfg()).unwrap();
        let dense = tr.state_at(&frac).unwrap();
        let direct = integrate_to_time(&PhasePoint::new(1.0, z0), &frac, &p, &cfg()).unwrap().final_point();
        prop_assert!((dense.y - direct.y).abs() <= 1e-8 * (1.0 + direct.y.abs()));
        prop_assert!((dense.z - direct.z).abs() <= 1e-7 * (1.0 + direct.z.abs()));
    }

    #[test]
    fn event_lands_on_level(z0 in -12.0..-1.0f64) {
        let p = Params::new(0.1).unwrap();
        let tr = integrate_to_event(&PhasePoint::new(1.0, z0), &0.0, &5.0, &p, &cfg()).unwrap();
        prop_assert!(tr.final_y().abs() <= 1e-12);
        prop_assert!(tr.terminal_event.is_some());
    }

    #[test]
    fn quadrature_of_inverse_sqrt(a in -5.0..0.0f64, w in 0.1..5.0f64) {
        // ∫_a^{a+w} dx / √(x - a) = 2√w
        let b = a + w;
        let got = quad_singular(|_, d: &f64| 1.0 / d.sqrt(), &a, &b, SingularEnd::Left, 1e-14).unwrap();
        prop_assert!((got - 2.0 * w.sqrt()).abs() <= 1e-12 * (1.0 + w));
        let got = quad_singular(|_, d: &f64| 1.0 / d.sqrt(), &a, &b, SingularEnd::Right, 1e-14).unwrap();
        prop_assert!((got - 2.0 * w.sqrt()).abs() <= 1e-12 * (1.0 + w));
    }
}

#[test]
fn tighter_tolerance_means_smaller_error() {
    // against the exact crossing of the critical trajectory
    let p = Params::new(0.215_986_928_890_290_05).unwrap();
    let err = |tol: f64| {
        let c = IntegratorConfig::new(tol, tol * 0.1).unwrap();
        let f = integrate_to_time(&PhasePoint::new(1.0, 0.0), &1.0, &p, &c)
            .unwrap()
            .final_point();
        (f.y + 1.0).abs() + f.z.abs()
    };
    assert!(err(1e-12) < err(1e-6));
    assert!(err(1e-12) < 1e-8);
}

#[test]
fn step_budget_is_respected() {
    let mut c = cfg();
    c.max_steps = 5;
    let r = integrate_to_time(
        &PhasePoint::new(1.0, -10.0),
        &1.0,
        &Params::new(0.01).unwrap(),
        &c,
    );
    assert!(r.is_err());
}
