use driftsim::driftframe::{
    cruise_velocity, solve_drift_velocity, ClearanceAdapter, ClearanceConfig, CruiseInputs, DriftTrigger, Mode,
};
use driftsim::geom::{rotate, wrap_angle, Vec2};
use driftsim::trajgen::{fit_sigmoid, project_point, SegmentKind};
use driftsim::windfield::MaskRegion;
use proptest::prelude::*;
use std::f64::consts::PI;

fn triggered() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (5.0..40.0f64, 1.0..20.0f64, 0.005..0.05f64, -PI..PI).prop_filter("drag exceeds thrust", |(v, f, k, _)| k * v * v > *f)
}

proptest! {
    #[test]
    fn drift_velocity_leaves_exactly_the_thrust_budget((v, f, kd, a) in triggered()) {
        let v_air = Vec2::new(a.cos(), a.sin()) * v;
        let d = solve_drift_velocity(&v_air, v, f, kd).unwrap();
        let residual = v_air - d;
        prop_assert!((kd * residual.norm_squared() - f).abs() <= 1e-9 * f);
        prop_assert!(d.dot(&v_air) > 0.0);
    }

    #[test]
    fn calm_enough_wind_needs_no_drift(v in 0.0..10.0f64, k in 0.005..0.05f64, a in -PI..PI) {
        let f = k * v * v * 1.01 + 1e-6;
        let v_air = Vec2::new(a.cos(), a.sin()) * v;
        prop_assert_eq!(solve_drift_velocity(&v_air, v, f, k).unwrap(), Vec2::zeros());
    }

    #[test]
    fn trigger_never_leaves_drift_inside_the_band(f in 1.0..20.0f64, kd in 0.005..0.05f64, frac in 0.81..1.0f64) {
        let v = (frac * f / kd).sqrt();
        let t = DriftTrigger::default();
        prop_assert_eq!(t.decide(Mode::Drift, v, f, kd), Mode::Drift);
        prop_assert_eq!(t.decide(Mode::Normal, v, f, kd), Mode::Normal);
    }

    #[test]
    fn cruise_speed_is_admitted_and_near_maximal(r_c in 0.8..4.0f64, w in 0.0..10.0f64) {
        let inputs = CruiseInputs { f_planar_max: 2.818, kd: 0.010045, m: 0.54, r_s: 12.5, r_c, dt_s: 1.0 };
        let v = cruise_velocity(&inputs, w, 1.0).unwrap();
        prop_assert!(inputs.admits(v, w, 1.0));
        prop_assert!(!inputs.admits(v + 3e-4, w, 1.0));
    }

    #[test]
    fn clearance_target_stays_in_band(v in 0.0..60.0f64) {
        let cfg = ClearanceConfig { r_ce_min: 0.3, r_ce_max: 1.3, t_hold: 5.0 };
        let a = ClearanceAdapter::new(cfg, 0.5, 12.5);
        let r = a.target(v);
        prop_assert!((0.8..=1.8).contains(&r));
    }

    #[test]
    fn sigmoid_is_monotone_between_its_endpoints(a in -5.0..5.0f64, b in -5.0..5.0f64, tau in 0.1..10.0f64) {
        let s = fit_sigmoid(a, b, tau, SegmentKind::Heading, 0.0).unwrap();
        let mut prev = s.value(0.0);
        for i in 1..=100 {
            let x = s.value(tau * i as f64 / 100.0);
            prop_assert!((x - prev) * (b - a) >= -1e-12);
            prev = x;
        }
        prop_assert!((prev - b).abs() <= 1e-12);
    }

    #[test]
    fn projected_point_is_on_the_clearance_circle(
        d in 0.1..15.0f64, r_c in 0.1..5.0f64, a in -PI..PI, b in -PI..PI, m in 0.1..15.0f64,
    ) {
        let p_d = Vec2::new(1.0, -2.0);
        let p_k = p_d + Vec2::new(a.cos(), a.sin()) * d;
        let p_min = p_d + Vec2::new(b.cos(), b.sin()) * m;
        let pr = project_point(&p_d, &Vec2::new(1.0, 0.0), &p_k, &p_min, r_c).unwrap();
        prop_assert!(((pr.p_star - p_k).norm() - r_c).abs() < 1e-9);
        prop_assert_eq!(pr.inside, d <= r_c);
    }

    #[test]
    fn wrap_angle_lands_in_half_open_interval(x in -100.0..100.0f64) {
        let w = wrap_angle(x);
        prop_assert!(w > -PI && w <= PI);
        let back = rotate(&Vec2::new(1.0, 0.0), w) - rotate(&Vec2::new(1.0, 0.0), x);
        prop_assert!(back.norm() < 1e-9);
    }

    #[test]
    fn mask_factor_is_a_fraction(x in -30.0..30.0f64, y in -30.0..30.0f64, edge in 0.0..5.0f64) {
        let m = MaskRegion { min: Vec2::new(-5.0, -5.0), max: Vec2::new(5.0, 5.0), edge };
        let f = m.factor(&Vec2::new(x, y));
        prop_assert!((0.0..=1.0).contains(&f));
        if x.abs() <= 5.0 && y.abs() <= 5.0 {
            prop_assert_eq!(f, 0.0);
        }
    }
}
