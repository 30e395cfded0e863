//! WebAssembly entry points for the browser demo. Each returns a JSON string
//! so the page needs no generated type glue beyond `wasm-bindgen`.

use driftsim::driftframe::{drift_bounds, planar_kd, solve_drift_velocity, to_drift_frame, Mode};
use driftsim::dynamics::VehicleParams;
use driftsim::geom::{unit_from_angle, EnvironmentConstants, Vec2};
use driftsim::sim::{run, ObstacleSpec, Scenario};
use driftsim::trajgen::Trajectory;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const BUNDLED: [(&str, &str); 4] = [
    ("baseline", include_str!("../../../scenarios/baseline.json")),
    ("scenario_a", include_str!("../../../scenarios/scenario_a.json")),
    ("scenario_a_18", include_str!("../../../scenarios/scenario_a_18.json")),
    ("scenario_b", include_str!("../../../scenarios/scenario_b.json")),
];

fn demo_vehicle(thrust_derate: f64) -> VehicleParams {
    let sc = Scenario::from_json(BUNDLED[1].1).expect("bundled scenario parses");
    VehicleParams { thrust_derate, ..sc.vehicles[0].params.clone() }
}

fn xy(v: &Vec2) -> Value {
    json!([v.x, v.y])
}

/// Drift-frame solution for a steady wind of `speed` m/s from heading
/// `heading_deg`, for the demo quadrotor with the given thrust derate.
pub fn drift_solution(speed: f64, heading_deg: f64, thrust_derate: f64, budget: f64) -> Value {
    let env = EnvironmentConstants::default();
    let p = demo_vehicle(thrust_derate.clamp(0.05, 1.0));
    let dir = unit_from_angle(heading_deg.to_radians());
    let v_air = dir * speed.max(0.0);
    let f = p.f_planar_max(&env);
    let kd = planar_kd(&p, &dir, env.rho);
    let v_crit = (f / kd).sqrt();
    let budget = budget.clamp(0.05, 1.0);
    let v_drift = solve_drift_velocity(&v_air, speed, budget * f, kd).unwrap_or_else(|_| Vec2::zeros());
    let view = to_drift_frame(&v_drift, &v_air, &[], 1.0);
    let b = drift_bounds(speed, f, kd);
    json!({
        "f_planar_max": f,
        "kd": kd,
        "v_crit": v_crit,
        "drift_needed": kd * speed * speed > f,
        "v_air": xy(&v_air),
        "v_drift": xy(&v_drift),
        "v_air_drift_frame": xy(&view.v_air),
        "authority_radius": v_crit,
        "downwind_min": b.downwind_min,
        "downwind_max": b.downwind_max,
    })
}

/// Planar path of a heading change `dphi_deg` at `speed`, optionally
/// followed by a speed change to `new_speed`, under acceleration cap `a_max`.
pub fn turn_path(dphi_deg: f64, speed: f64, new_speed: f64, a_max: f64) -> Value {
    let a_max = a_max.max(0.05);
    let speed = speed.max(0.05);
    let mut traj = Trajectory::new(0.0, Vec2::zeros(), 1.0, 0.0, speed, Vec2::zeros(), 0.02);
    let turn = traj.command_heading(dphi_deg.to_radians(), 0.5, speed, a_max, 0.0).ok().flatten();
    let slow = traj.command_speed(new_speed.max(0.0), 0.5, a_max, 0.0).ok().flatten();
    let t_end = traj.end_time() + 2.0;
    let n = 400;
    let pts: Vec<Value> = (0..=n)
        .map(|i| {
            let s = traj.sample(t_end * i as f64 / n as f64);
            json!([s.p.x, s.p.y])
        })
        .collect();
    json!({
        "points": pts,
        "t_end": t_end,
        "turn_duration": turn.map(|s| s.tau_f),
        "speed_change_start": slow.map(|s| s.t0),
        "peak_accel": traj.peak_accel(0.0, t_end),
    })
}

fn outline(o: &ObstacleSpec) -> Value {
    match o {
        ObstacleSpec::Disc { center, radius, .. } => {
            Value::Array((0..32).map(|i| xy(&(center + unit_from_angle(i as f64 * std::f64::consts::TAU / 32.0) * *radius))).collect())
        }
        ObstacleSpec::Polygon { vertices, .. } => Value::Array(vertices.iter().map(xy).collect()),
    }
}

/// Run a bundled scenario and return decimated tracks plus the summary.
pub fn scenario_run(name: &str, seed: Option<u64>) -> Result<Value, String> {
    let text = BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| format!("unknown scenario {name}"))?;
    let mut sc = Scenario::from_json(text).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        sc.sim.seed = s;
    }
    let out = run(&sc).map_err(|e| e.to_string())?;
    let tracks: Vec<Value> = out
        .log
        .vehicle_ids()
        .into_iter()
        .map(|id| {
            let rows: Vec<_> = out.log.rows_for(id).step_by(5).collect();
            json!({
                "id": id,
                "points": rows.iter().map(|r| json!([r.p[0], r.p[1]])).collect::<Vec<_>>(),
                "drift": rows.iter().map(|r| r.mode == Mode::Drift).collect::<Vec<_>>(),
                "altitude": rows.iter().map(|r| r.p[2]).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(json!({
        "name": sc.name,
        "obstacles": sc.obstacles.iter().map(outline).collect::<Vec<_>>(),
        "tracks": tracks,
        "summary": out.summary,
    }))
}

#[wasm_bindgen]
pub fn scenario_names() -> String {
    json!(BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>()).to_string()
}

#[wasm_bindgen]
pub fn solve_drift(speed: f64, heading_deg: f64, thrust_derate: f64, budget: f64) -> String {
    drift_solution(speed, heading_deg, thrust_derate, budget).to_string()
}

#[wasm_bindgen]
pub fn plan_turn(dphi_deg: f64, speed: f64, new_speed: f64, a_max: f64) -> String {
    turn_path(dphi_deg, speed, new_speed, a_max).to_string()
}

/// `seed < 0` keeps the scenario's own seed.
#[wasm_bindgen]
pub fn run_scenario(name: &str, seed: f64) -> Result<String, JsValue> {
    let seed = (seed >= 0.0).then_some(seed as u64);
    scenario_run(name, seed).map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}
