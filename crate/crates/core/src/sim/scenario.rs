//! Scenario files: schema, loading with field-path diagnostics, validation.

use super::world::{Gate, ObstacleSpec};
use super::SimError;
use crate::controller::ControlGains;
use crate::driftframe::{ClearanceConfig, DriftTrigger};
use crate::dynamics::VehicleParams;
use crate::geom::{EnvironmentConstants, Vec2, Vec3};
use crate::trajgen::ClusterParams;
use crate::windfield::WindConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_dt_inner() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Sensing and communication period [s].
    pub dt_s: f64,
    /// Control and planning period [s].
    pub dt_c: f64,
    /// Attitude loop and integration step [s].
    #[serde(default = "default_dt_inner")]
    pub dt_inner: f64,
    pub t_end: f64,
    /// Seed of the turbulence field.
    #[serde(default)]
    pub seed: u64,
    /// End the run once every vehicle has reached its goal.
    #[serde(default)]
    pub stop_when_all_reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Sensor and communication range [m].
    pub r_s: f64,
    /// Largest obstacle speed the cruise speed is sized for [m/s].
    pub v_o_max: f64,
    /// Delay assumed before a new course takes effect [s].
    pub reaction_time: f64,
    pub cluster: ClusterParams,
    pub clearance: ClearanceConfig,
    pub trigger: DriftTrigger,
    /// Fraction of the planar thrust budget that drag may use in the drift frame.
    pub drift_budget: f64,
    /// Wind-estimate filter time constant [s].
    pub tau_filter: f64,
    /// Sliding window of the wind-speed maximum [s].
    pub wind_window: f64,
    /// Goal ball radius [m].
    pub goal_tolerance: f64,
    /// Time inside the goal ball that counts as arrival [s].
    pub goal_dwell: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            r_s: 12.5,
            v_o_max: 1.0,
            reaction_time: 0.5,
            cluster: ClusterParams::default(),
            clearance: ClearanceConfig::default(),
            trigger: DriftTrigger::default(),
            drift_budget: 0.5,
            tau_filter: 1.0,
            wind_window: 10.0,
            goal_tolerance: 0.2,
            goal_dwell: 2.0,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub params: VehicleParams,
    #[serde(default)]
    pub gains: ControlGains,
    pub start: Vec3,
    pub goal: Vec2,
    #[serde(default = "yes")]
    pub drift_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub sim: SimConfig,
    #[serde(default)]
    pub environment: EnvironmentConstants,
    #[serde(default)]
    pub wind: WindConfig,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub planner: PlannerConfig,
    /// Passages to monitor for occupancy.
    #[serde(default)]
    pub gates: Vec<Gate>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let s: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            SimError::Config(format!("{} (at `{}`, line {} column {})", inner, e.path(), inner.line(), inner.column()))
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Wind configuration with the turbulence seed taken from the run seed.
    pub fn wind_config(&self) -> WindConfig {
        let mut w = self.wind.clone();
        if let Some(t) = w.turbulence.as_mut() {
            t.seed = self.sim.seed;
        }
        w
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |s: String| Err(SimError::Config(s));
        let sim = &self.sim;
        if !(sim.dt_c > 0.0 && sim.dt_s >= sim.dt_c && sim.dt_inner > 0.0 && sim.dt_inner <= sim.dt_c) {
            return bad("sim: need dt_s >= dt_c >= dt_inner > 0".into());
        }
        let ratio = |a: f64, b: f64| (a / b - (a / b).round()).abs() < 1e-9;
        if !ratio(sim.dt_s, sim.dt_c) || !ratio(sim.dt_c, sim.dt_inner) {
            return bad("sim: dt_s must be a multiple of dt_c and dt_c of dt_inner".into());
        }
        if !(sim.t_end > 0.0) {
            return bad("sim.t_end must be > 0".into());
        }
        if self.vehicles.is_empty() {
            return bad("vehicles: at least one vehicle is required".into());
        }
        let mut ids: Vec<u32> = self.vehicles.iter().map(|v| v.params.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("vehicles: ids must be unique".into());
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            v.params.validate(&self.environment).map_err(|e| SimError::Config(format!("vehicles[{i}].params: {e}")))?;
            v.gains.validate().map_err(|e| SimError::Config(format!("vehicles[{i}].gains: {e}")))?;
            if !(v.start.z > 0.0) {
                return bad(format!("vehicles[{i}].start: altitude must be > 0"));
            }
            for (k, o) in self.obstacles.iter().enumerate() {
                if o.distance(&v.goal, 0.0) < self.planner.clearance.r_ce_max + v.params.r_cv {
                    return bad(format!("vehicles[{i}].goal: too close to obstacles[{k}]"));
                }
            }
        }
        for (k, o) in self.obstacles.iter().enumerate() {
            o.validate().map_err(|e| SimError::Config(format!("obstacles[{k}]: {e}")))?;
            if o.velocity().norm() >= self.planner.v_o_max.max(1e-12) && o.velocity().norm() > 0.0 {
                return bad(format!("obstacles[{k}]: speed exceeds planner.v_o_max"));
            }
        }
        let p = &self.planner;
        if !(p.r_s > 0.0 && p.drift_budget > 0.0 && p.drift_budget <= 1.0 && p.tau_filter > 0.0 && p.wind_window > 0.0) {
            return bad("planner: r_s, tau_filter, wind_window must be > 0 and drift_budget in (0, 1]".into());
        }
        if !(p.clearance.r_ce_min >= 0.0 && p.clearance.r_ce_max >= p.clearance.r_ce_min) {
            return bad("planner.clearance: need 0 <= r_ce_min <= r_ce_max".into());
        }
        if !(p.trigger.eta > 0.0 && p.trigger.eta < 1.0) {
            return bad("planner.trigger.eta must be in (0, 1)".into());
        }
        crate::windfield::WindField::build(&self.wind_config()).map_err(|e| SimError::Config(format!("wind: {e}")))?;
        Ok(())
    }
}
