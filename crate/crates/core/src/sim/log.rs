//! Run log rows, event records and the per-vehicle summary.

use crate::driftframe::Mode;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const CSV_HEADER: &str = "t,id,px,py,pz,vx,vy,vz,pdx,pdy,pdz,mode,vdriftx,vdrifty,f_cmd,saturated,vairx,vairy,wx,wy,r_c,v_c,min_obs_dist,min_peer_dist,events";

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub id: u32,
    pub p: [f64; 3],
    pub v: [f64; 3],
    pub p_d: [f64; 3],
    pub mode: Mode,
    pub v_drift: [f64; 2],
    pub f_cmd: f64,
    pub saturated: bool,
    /// Estimated air velocity.
    pub v_air: [f64; 2],
    /// True wind at the vehicle.
    pub wind: [f64; 2],
    pub r_c: f64,
    pub v_c: f64,
    pub min_obs_dist: f64,
    pub min_peer_dist: f64,
    pub events: Vec<String>,
}

fn num(out: &mut String, x: f64) {
    if x.is_finite() {
        let _ = write!(out, "{x:.6},");
    } else {
        out.push_str("inf,");
    }
}

impl LogRow {
    pub fn write_csv(&self, out: &mut String) {
        num(out, self.t);
        let _ = write!(out, "{},", self.id);
        for x in self.p.iter().chain(&self.v).chain(&self.p_d) {
            num(out, *x);
        }
        out.push_str(match self.mode {
            Mode::Normal => "normal,",
            Mode::Drift => "drift,",
        });
        for x in self.v_drift {
            num(out, x);
        }
        num(out, self.f_cmd);
        out.push_str(if self.saturated { "1," } else { "0," });
        for x in self.v_air.iter().chain(&self.wind) {
            num(out, *x);
        }
        for x in [self.r_c, self.v_c, self.min_obs_dist, self.min_peer_dist] {
            num(out, x);
        }
        out.push_str(&self.events.join(";"));
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub vehicle: u32,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Collision,
    RcViolation,
    DriftEnter,
    DriftUpdate,
    DriftExit,
    NoFeasibleCourse,
    NoControlAuthority,
    SaturationStart,
    SaturationEnd,
    Crash,
    GoalReached,
    NonFiniteState,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Collision => "collision",
            Self::RcViolation => "rc_violation",
            Self::DriftEnter => "drift_enter",
            Self::DriftUpdate => "drift_update",
            Self::DriftExit => "drift_exit",
            Self::NoFeasibleCourse => "no_feasible_course",
            Self::NoControlAuthority => "no_control_authority",
            Self::SaturationStart => "saturation_start",
            Self::SaturationEnd => "saturation_end",
            Self::Crash => "crash",
            Self::GoalReached => "goal_reached",
            Self::NonFiniteState => "non_finite_state",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
    pub events: Vec<Event>,
}

impl RunLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 200);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            r.write_csv(&mut out);
        }
        out
    }

    pub fn events_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn rows_for(&self, id: u32) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(move |r| r.id == id)
    }

    pub fn vehicle_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.rows.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalProgress {
    pub reached: bool,
    /// Time the vehicle entered the goal ball for the stay that counted.
    pub t_reach: Option<f64>,
}

/// Per vehicle: did it enter the goal ball of radius `tol` and stay `dwell` seconds?
pub fn goal_progress(log: &RunLog, goals: &BTreeMap<u32, [f64; 2]>, tol: f64, dwell: f64) -> BTreeMap<u32, GoalProgress> {
    let mut out = BTreeMap::new();
    for (&id, g) in goals {
        let mut entered: Option<f64> = None;
        let mut result = GoalProgress { reached: false, t_reach: None };
        for r in log.rows_for(id) {
            let d = (r.p[0] - g[0]).hypot(r.p[1] - g[1]);
            if d <= tol {
                let t0 = *entered.get_or_insert(r.t);
                if r.t - t0 >= dwell - 1e-9 {
                    result = GoalProgress { reached: true, t_reach: Some(t0) };
                    break;
                }
            } else {
                entered = None;
            }
        }
        out.insert(id, result);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSummary {
    pub id: u32,
    pub drift_enabled: bool,
    pub reached: bool,
    pub t_reach: Option<f64>,
    pub crashed: bool,
    pub min_obstacle_distance: Option<f64>,
    pub min_peer_distance: Option<f64>,
    pub max_f_cmd: f64,
    pub f_max: f64,
    /// Longest run of consecutive saturated control ticks [s].
    pub longest_saturation: f64,
    pub min_altitude: f64,
    pub max_altitude: f64,
    /// Closed intervals spent in drift mode [s].
    pub drift_intervals: Vec<[f64; 2]>,
    pub collisions: usize,
    pub rc_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub t_final: f64,
    pub aborted: Option<String>,
    pub vehicles: Vec<VehicleSummary>,
}

fn finite_min(it: impl Iterator<Item = f64>) -> Option<f64> {
    let m = it.filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    m.is_finite().then_some(m)
}

/// Summary statistics computed from the log alone.
pub fn summarize_vehicle(log: &RunLog, id: u32, dt_c: f64, progress: GoalProgress, drift_enabled: bool, f_max: f64) -> VehicleSummary {
    let rows: Vec<&LogRow> = log.rows_for(id).collect();
    let mut drift_intervals = Vec::new();
    let mut open: Option<f64> = None;
    let (mut run, mut longest) = (0usize, 0usize);
    for r in &rows {
        match (r.mode, open) {
            (Mode::Drift, None) => open = Some(r.t),
            (Mode::Normal, Some(t0)) => {
                drift_intervals.push([t0, r.t]);
                open = None;
            }
            _ => {}
        }
        if r.saturated {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    if let (Some(t0), Some(last)) = (open, rows.last()) {
        drift_intervals.push([t0, last.t]);
    }
    let count = |k: EventKind| log.events.iter().filter(|e| e.vehicle == id && e.kind == k).count();
    VehicleSummary {
        id,
        drift_enabled,
        reached: progress.reached,
        t_reach: progress.t_reach,
        crashed: count(EventKind::Crash) > 0,
        min_obstacle_distance: finite_min(rows.iter().map(|r| r.min_obs_dist)),
        min_peer_distance: finite_min(rows.iter().map(|r| r.min_peer_dist)),
        max_f_cmd: rows.iter().map(|r| r.f_cmd).fold(0.0, f64::max),
        f_max,
        longest_saturation: longest as f64 * dt_c,
        min_altitude: rows.iter().map(|r| r.p[2]).fold(f64::INFINITY, f64::min),
        max_altitude: rows.iter().map(|r| r.p[2]).fold(f64::NEG_INFINITY, f64::max),
        drift_intervals,
        collisions: count(EventKind::Collision),
        rc_violations: count(EventKind::RcViolation),
    }
}
