use driftsim::sim::{run, EventKind, Scenario, CSV_HEADER};
use std::path::PathBuf;

fn bundled(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&p).unwrap()
}

const ONE_VEHICLE: &str = r#"{
  "name": "t",
  "sim": { "dt_s": 1.0, "dt_c": 0.1, "t_end": 30.0, "seed": 1, "stop_when_all_reached": true },
  "vehicles": [{
    "params": { "id": 7, "m": 0.54, "f_max": 15.0, "thrust_derate": 0.4, "c_d": 0.41,
                "area": [0.04, 0.04, 0.09], "r_cv": 0.5, "v_w_op": 20.0 },
    "start": [0.0, 0.0, 3.0],
    "goal": [10.0, 5.0]
  }]
}"#;

#[test]
fn lone_vehicle_reaches_an_oblique_goal_and_stops_early() {
    let sc = Scenario::from_json(ONE_VEHICLE).unwrap();
    let out = run(&sc).unwrap();
    let v = &out.summary.vehicles[0];
    assert!(v.reached, "{v:?}");
    assert!(out.summary.t_final < sc.sim.t_end);
    assert_eq!(out.log.count(EventKind::GoalReached), 1);
    let last = out.log.rows.last().unwrap();
    assert!((last.p[0] - 10.0).hypot(last.p[1] - 5.0) <= sc.planner.goal_tolerance);
    assert!((v.max_altitude - 3.0).abs() < 0.05 && (v.min_altitude - 3.0).abs() < 0.05);
}

#[test]
fn baseline_scenario_is_uneventful() {
    let out = run(&bundled("baseline.json")).unwrap();
    assert!(out.summary.vehicles.iter().all(|v| v.reached && !v.crashed && v.drift_intervals.is_empty()));
    assert!(!out.collided() && !out.non_finite());
}

#[test]
fn csv_rows_match_the_header() {
    let out = run(&Scenario::from_json(ONE_VEHICLE).unwrap()).unwrap();
    let csv = out.log.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let cols = CSV_HEADER.split(',').count();
    assert!(lines.all(|l| l.split(',').count() == cols));
}

#[test]
fn events_are_json_lines() {
    let out = run(&bundled("scenario_a.json")).unwrap();
    let text = out.log.events_jsonl();
    let kinds: Vec<String> = text
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_string())
        .collect();
    for k in ["drift_enter", "drift_exit", "crash", "no_control_authority"] {
        assert!(kinds.iter().any(|x| x == k), "missing {k}");
    }
}

#[test]
fn drift_mode_moves_with_the_wind() {
    let out = run(&bundled("scenario_a.json")).unwrap();
    let row = out.log.rows_for(1).find(|r| r.events.iter().any(|e| e == "drift_enter")).unwrap();
    assert!(row.v_drift[1] > 0.0 && row.v_drift[0].abs() < 0.1);
}

#[test]
fn malformed_scenarios_name_the_offending_field() {
    let err = Scenario::from_json(&ONE_VEHICLE.replace("\"m\": 0.54", "\"m\": \"heavy\"")).unwrap_err().to_string();
    assert!(err.contains("vehicles[0].params.m"), "{err}");
    let err = Scenario::from_json(&ONE_VEHICLE.replace("\"seed\": 1", "\"seed\": 1, \"bogus\": 2")).unwrap_err().to_string();
    assert!(err.contains("bogus"), "{err}");
    let err = Scenario::from_json(&ONE_VEHICLE.replace("\"dt_c\": 0.1", "\"dt_c\": 0.3")).unwrap_err().to_string();
    assert!(err.contains("multiple"), "{err}");
}

#[test]
fn duplicate_ids_are_rejected() {
    let mut sc = Scenario::from_json(ONE_VEHICLE).unwrap();
    sc.vehicles.push(sc.vehicles[0].clone());
    assert!(sc.validate().unwrap_err().to_string().contains("unique"));
}

#[test]
fn goal_inside_an_obstacle_is_rejected() {
    let text = ONE_VEHICLE.replace(
        "\"vehicles\"",
        r#""obstacles": [{ "shape": "disc", "center": [10.0, 5.0], "radius": 1.0 }], "vehicles""#,
    );
    assert!(Scenario::from_json(&text).unwrap_err().to_string().contains("goal"));
}

#[test]
fn different_seeds_change_turbulent_runs_only() {
    let mut a = bundled("scenario_b.json");
    let first = run(&a).unwrap().log.to_csv();
    a.sim.seed += 1;
    let second = run(&a).unwrap().log.to_csv();
    assert_ne!(first, second);
}
