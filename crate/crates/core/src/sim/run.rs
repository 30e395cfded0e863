//! The fixed-step simulation loop.

use super::agent::{Agent, Context};
use super::log::{goal_progress, summarize_vehicle, Event, EventKind, LogRow, RunLog, RunSummary};
use super::safety::{check_safety, Other, SafetyKind};
use super::scenario::Scenario;
use super::world::ObstacleSpec;
use super::SimError;
use crate::geom::{planar, unit_from_angle, Vec2};
use crate::trajgen::{PeerReport, ScanReturn};
use crate::windfield::WindField;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

/// Sensor bearings per revolution.
pub const SCAN_RAYS: usize = 360;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: RunLog,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn collided(&self) -> bool {
        self.log.count(EventKind::Collision) > 0
    }

    pub fn non_finite(&self) -> bool {
        self.log.count(EventKind::NonFiniteState) > 0
    }
}

/// Range/bearing returns from `origin`, one per degree, bearings ascending.
pub fn scan(origin: &Vec2, obstacles: &[ObstacleSpec], r_s: f64, t: f64) -> Vec<ScanReturn> {
    (0..SCAN_RAYS)
        .filter_map(|i| {
            let bearing = -PI + i as f64 * 2.0 * PI / SCAN_RAYS as f64;
            let dir = unit_from_angle(bearing);
            obstacles
                .iter()
                .filter_map(|o| o.ray_hit(origin, &dir, r_s, t).map(|s| (s, o.velocity())))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(range, v)| ScanReturn { bearing, range, velocity: Some(v) })
        })
        .collect()
}

pub fn run(scenario: &Scenario) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    let wind = WindField::build(&scenario.wind_config()).map_err(|e| SimError::Config(format!("wind: {e}")))?;
    let sim = &scenario.sim;
    let ctx = Context {
        env: &scenario.environment,
        planner: &scenario.planner,
        dt_s: sim.dt_s,
        dt_c: sim.dt_c,
        dt_inner: sim.dt_inner,
    };
    let mut specs: Vec<_> = scenario.vehicles.iter().collect();
    specs.sort_by_key(|v| v.params.id);
    let mut agents = specs
        .iter()
        .map(|s| Agent::new(s, &ctx).map_err(|e| SimError::Config(format!("vehicle {}: {e}", s.params.id))))
        .collect::<Result<Vec<_>, _>>()?;

    let sense_every = (sim.dt_s / sim.dt_c).round() as usize;
    let inner = (sim.dt_c / sim.dt_inner).round() as usize;
    let n_ticks = (sim.t_end / sim.dt_c).round() as usize;
    let r_s = scenario.planner.r_s;
    let mut log = RunLog::default();
    let mut active: BTreeSet<(usize, Other, u8)> = BTreeSet::new();
    let mut aborted = None;
    let mut t_final = 0.0;
    let mut in_goal_since: Vec<Option<f64>> = vec![None; agents.len()];

    'ticks: for k in 0..=n_ticks {
        let t = k as f64 * sim.dt_c;
        t_final = t;
        for a in agents.iter_mut() {
            a.update_estimates(t, &ctx);
        }
        if k % sense_every == 0 {
            let reports: Vec<PeerReport> = agents.iter().filter(|a| !a.crashed).map(|a| a.report(t)).collect();
            for a in agents.iter_mut() {
                let here = planar(&a.state.p);
                let sc = scan(&here, &scenario.obstacles, r_s, t);
                let heard: Vec<PeerReport> =
                    reports.iter().filter(|r| r.id != a.id && (r.position - here).norm() <= r_s).cloned().collect();
                a.sense(t, &sc, &heard, &ctx);
            }
        } else {
            for a in agents.iter_mut() {
                if a.wants_replan() {
                    let here = planar(&a.state.p);
                    let sc = scan(&here, &scenario.obstacles, r_s, t);
                    a.sense(t, &sc, &[], &ctx);
                }
            }
        }
        for a in agents.iter_mut() {
            a.goal_logic(t);
            a.control(t, &ctx);
        }

        // safety and logging at time t
        let positions: Vec<Vec2> = agents.iter().map(|a| planar(&a.state.p)).collect();
        let r_cv: Vec<f64> = agents.iter().map(|a| a.params.r_cv).collect();
        let r_c: Vec<f64> = agents.iter().map(|a| a.drift.r_c).collect();
        let report = check_safety(&positions, &scenario.obstacles, &r_cv, &r_c, t);
        let mut now = BTreeSet::new();
        let mut tick_events: Vec<Vec<String>> = vec![Vec::new(); agents.len()];
        for e in &report.events {
            let code = match e.kind {
                SafetyKind::Collision => 0u8,
                SafetyKind::RcViolation => 1u8,
            };
            now.insert((e.vehicle, e.other, code));
            if !active.contains(&(e.vehicle, e.other, code)) {
                let kind = if code == 0 { EventKind::Collision } else { EventKind::RcViolation };
                let detail = match e.other {
                    Other::Obstacle(o) => format!("obstacle {o} distance {:.3}", e.distance),
                    Other::Vehicle(j) => format!("vehicle {} distance {:.3}", agents[j].id, e.distance),
                };
                tick_events[e.vehicle].push(kind.name().to_string());
                log.events.push(Event { t, vehicle: agents[e.vehicle].id, kind, detail });
            }
        }
        active = now;
        for (i, a) in agents.iter_mut().enumerate() {
            for (kind, detail) in a.take_events() {
                ::log::debug!("t={t:.2} vehicle {} {} {detail}", a.id, kind.name());
                tick_events[i].push(kind.name().to_string());
                log.events.push(Event { t, vehicle: a.id, kind, detail });
            }
            let r = a.reference(t);
            let est = a.estimate();
            let w = wind.sample(&positions[i], t);
            log.rows.push(LogRow {
                t,
                id: a.id,
                p: a.state.p.into(),
                v: a.state.v.into(),
                p_d: r.p_d.into(),
                mode: a.drift.mode,
                v_drift: a.drift.v_drift.into(),
                f_cmd: a.command.f_cmd,
                saturated: a.saturated,
                v_air: est.map(|e| e.v_air.into()).unwrap_or([0.0; 2]),
                wind: w.into(),
                r_c: a.drift.r_c,
                v_c: a.drift.v_c,
                min_obs_dist: report.min_obstacle[i],
                min_peer_dist: report.min_peer[i],
                events: std::mem::take(&mut tick_events[i]),
            });
        }

        for (i, a) in agents.iter().enumerate() {
            if (positions[i] - a.goal).norm() <= scenario.planner.goal_tolerance {
                in_goal_since[i].get_or_insert(t);
            } else {
                in_goal_since[i] = None;
            }
        }
        let dwell = scenario.planner.goal_dwell;
        if sim.stop_when_all_reached && in_goal_since.iter().all(|s| s.is_some_and(|s0| t - s0 >= dwell + sim.dt_c)) {
            break 'ticks;
        }
        if k == n_ticks {
            break;
        }

        for j in 0..inner {
            let ts = t + j as f64 * sim.dt_inner;
            for a in agents.iter_mut() {
                let w = wind.sample(&planar(&a.state.p), ts);
                if let Err(e) = a.step_inner(&w, &ctx) {
                    log.events.push(Event { t: ts, vehicle: a.id, kind: EventKind::NonFiniteState, detail: e.to_string() });
                    aborted = Some(format!("vehicle {}: {e}", a.id));
                    break 'ticks;
                }
            }
        }
    }

    let goals: BTreeMap<u32, [f64; 2]> = agents.iter().map(|a| (a.id, a.goal.into())).collect();
    let progress = goal_progress(&log, &goals, scenario.planner.goal_tolerance, scenario.planner.goal_dwell);
    for a in &agents {
        if let Some(g) = progress[&a.id].t_reach.filter(|_| progress[&a.id].reached) {
            log.events.push(Event { t: g, vehicle: a.id, kind: EventKind::GoalReached, detail: String::new() });
        }
    }
    let vehicles = agents
        .iter()
        .map(|a| summarize_vehicle(&log, a.id, sim.dt_c, progress[&a.id], a.drift_enabled, a.params.f_max_eff()))
        .collect();
    ::log::info!("{}: finished at t={t_final:.2} with {} events", scenario.name, log.events.len());
    let summary = RunSummary { scenario: scenario.name.clone(), seed: sim.seed, t_final, aborted, vehicles };
    Ok(RunOutput { log, summary })
}
