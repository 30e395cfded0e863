use driftsim_web::{drift_solution, scenario_run, turn_path};

#[test]
fn strong_wind_needs_drift_and_leaves_the_authority_radius() {
    let v = drift_solution(19.0, 90.0, 0.4, 0.5);
    assert_eq!(v["drift_needed"], true);
    let d: Vec<f64> = serde_json::from_value(v["v_drift"].clone()).unwrap();
    assert!(d[0].abs() < 1e-9 && d[1] > 0.0);
    let rel: Vec<f64> = serde_json::from_value(v["v_air_drift_frame"].clone()).unwrap();
    let q = v["authority_radius"].as_f64().unwrap();
    assert!(rel[0].hypot(rel[1]) <= q + 1e-9);
}

#[test]
fn light_wind_has_zero_drift() {
    let v = drift_solution(5.0, 0.0, 0.4, 0.5);
    assert_eq!(v["drift_needed"], false);
    assert_eq!(v["v_drift"], serde_json::json!([0.0, 0.0]));
}

#[test]
fn turn_path_respects_acceleration_cap() {
    let v = turn_path(90.0, 1.5, 0.5, 1.0);
    assert!(v["peak_accel"].as_f64().unwrap() <= 1.0 + 1e-9);
    let pts = v["points"].as_array().unwrap();
    let last = &pts[pts.len() - 1];
    // heading ends near +y, so the path bends left
    assert!(last[1].as_f64().unwrap() > 0.5);
}

#[test]
fn bundled_scenarios_run() {
    let v = scenario_run("baseline", None).unwrap();
    assert_eq!(v["tracks"].as_array().unwrap().len(), 1);
    assert_eq!(v["summary"]["vehicles"][0]["reached"], true);
    assert!(scenario_run("nope", None).is_err());
}
