//! Wind estimation, drift-mode switching and the quantities that change when
//! planning moves into a frame translating with the wind.

use crate::dynamics::{drag_coefficient_kd, VehicleParams};
use crate::geom::{lift, planar, EnvironmentConstants, Vec2, Vec3};
use crate::trajgen::sigmoid::tau_min_heading;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::PI;
use thiserror::Error;

/// Residual drag below which the relative wind is taken to be zero [N].
pub const D_MIN: f64 = 1e-3;
/// Bisection tolerance of [`cruise_velocity`] [m/s].
pub const CRUISE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriftError {
    #[error("wind direction undefined while drift mode is requested")]
    DegenerateWind,
    #[error("no control authority: available acceleration is not positive even when hovering")]
    NoControlAuthority,
    #[error("wind estimate is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Normal,
    Drift,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindEstimate {
    /// Filtered air velocity estimate [m/s].
    pub v_air: Vec2,
    /// Magnitude of the planar residual force attributed to drag [N].
    pub residual: f64,
    pub timestamp: f64,
    /// Largest filtered air speed over the sliding window [m/s].
    pub v_air_max: f64,
}

/// Planar drag gain for relative wind along `dir`; falls back to the body x
/// axis when `dir` vanishes.
pub fn planar_kd(params: &VehicleParams, dir: &Vec2, rho: f64) -> f64 {
    let n = dir.norm();
    let x_w = if n > 1e-12 { lift(&(dir / n), 0.0) } else { Vec3::x() };
    drag_coefficient_kd(params, Some(&x_w), rho).expect("direction is defined")
}

/// Inverse-dynamics wind estimate from one measured acceleration.
///
/// The planar residual `d = m a - f_applied - m g` is taken to be drag
/// `-K_d |v_w| v_w` with `v_w = p' - v_air`. Returns the raw air velocity and
/// the residual magnitude; below [`D_MIN`] the air is taken to move with the
/// vehicle.
pub fn estimate_wind_raw(
    velocity: &Vec3,
    accel: &Vec3,
    applied_force: &Vec3,
    params: &VehicleParams,
    env: &EnvironmentConstants,
) -> (Vec2, f64) {
    let d = planar(&(accel * params.m - applied_force - env.gravity() * params.m));
    let mag = d.norm();
    let p_dot = planar(velocity);
    if mag < D_MIN {
        return (p_dot, mag);
    }
    // A_eff depends only on the direction of v_w, which is -d, so no iteration is needed
    let dir = -d / mag;
    let kd = planar_kd(params, &dir, env.rho);
    let v_w = dir * (mag / kd).sqrt();
    (p_dot - v_w, mag)
}

/// Low-pass filtered wind estimate with a sliding-window maximum.
#[derive(Debug, Clone)]
pub struct WindEstimator {
    pub tau_filter: f64,
    pub window: f64,
    filtered: Option<Vec2>,
    history: VecDeque<(f64, f64)>,
    last_velocity: Option<(f64, Vec3)>,
    last: Option<WindEstimate>,
}

impl WindEstimator {
    pub fn new(tau_filter: f64, window: f64) -> Self {
        Self { tau_filter, window, filtered: None, history: VecDeque::new(), last_velocity: None, last: None }
    }

    pub fn latest(&self) -> Option<WindEstimate> {
        self.last
    }

    /// Feed the velocity at time `t` together with the mean force applied
    /// by the rotors since the previous call. The first call only primes
    /// the finite difference.
    pub fn update(
        &mut self,
        t: f64,
        velocity: &Vec3,
        mean_applied_force: &Vec3,
        params: &VehicleParams,
        env: &EnvironmentConstants,
    ) -> Result<Option<WindEstimate>, DriftError> {
        let prev = self.last_velocity.replace((t, *velocity));
        let Some((t_prev, v_prev)) = prev else {
            return Ok(None);
        };
        let dt = t - t_prev;
        if !(dt > 0.0) {
            return Ok(self.last);
        }
        let accel = (velocity - v_prev) / dt;
        // the mean force best matches the velocity at the middle of the interval
        let v_mid = (velocity + v_prev) * 0.5;
        let (raw, residual) = estimate_wind_raw(&v_mid, &accel, mean_applied_force, params, env);
        if !raw.iter().all(|x| x.is_finite()) {
            return Err(DriftError::NonFinite);
        }
        let filtered = match self.filtered {
            None => raw,
            Some(f) => f + (raw - f) * (1.0 - (-dt / self.tau_filter).exp()),
        };
        self.filtered = Some(filtered);
        self.history.push_back((t, filtered.norm()));
        while self.history.front().is_some_and(|&(ts, _)| ts < t - self.window) {
            self.history.pop_front();
        }
        let v_air_max = self.history.iter().map(|h| h.1).fold(0.0, f64::max);
        let est = WindEstimate { v_air: filtered, residual, timestamp: t, v_air_max };
        self.last = Some(est);
        Ok(self.last)
    }
}

/// Mode switching with a hysteresis band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftTrigger {
    /// Exit once drag falls below this fraction of the planar thrust budget.
    pub eta: f64,
}

impl Default for DriftTrigger {
    fn default() -> Self {
        Self { eta: 0.8 }
    }
}

impl DriftTrigger {
    pub fn decide(&self, mode: Mode, v_air_max: f64, f_planar_max: f64, kd: f64) -> Mode {
        let drag = kd * v_air_max * v_air_max;
        match mode {
            Mode::Normal if drag > f_planar_max => Mode::Drift,
            Mode::Drift if drag < self.eta * f_planar_max => Mode::Normal,
            m => m,
        }
    }
}

/// Bounds on the drift velocity: magnitude and downwind component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftBounds {
    pub min_norm: f64,
    pub max_norm: f64,
    pub downwind_min: f64,
    pub downwind_max: f64,
}

pub fn drift_bounds(v_air_max: f64, f_planar_max: f64, kd: f64) -> DriftBounds {
    let q = (f_planar_max / kd).sqrt();
    DriftBounds {
        min_norm: v_air_max - q,
        max_norm: (v_air_max * v_air_max + q * q).sqrt(),
        downwind_min: v_air_max - q,
        downwind_max: v_air_max,
    }
}

impl DriftBounds {
    pub fn contains(&self, v_drift: &Vec2, v_air_dir: &Vec2) -> bool {
        let n = v_drift.norm();
        let c = v_drift.dot(v_air_dir);
        n >= self.min_norm && n <= self.max_norm && c >= self.downwind_min && c <= self.downwind_max
    }
}

/// Smallest drift velocity that restores control authority, or zero when
/// the wind is within the planar thrust budget.
pub fn solve_drift_velocity(v_air: &Vec2, v_air_max: f64, f_planar_max: f64, kd: f64) -> Result<Vec2, DriftError> {
    if kd * v_air_max * v_air_max <= f_planar_max {
        return Ok(Vec2::zeros());
    }
    let n = v_air.norm();
    if n < 1e-9 {
        return Err(DriftError::DegenerateWind);
    }
    Ok(v_air / n * (v_air_max - (f_planar_max / kd).sqrt()))
}

/// Quantities as seen from a frame moving at `v_drift`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameView {
    pub v_air: Vec2,
    pub obstacle_velocities: Vec<Vec2>,
    /// Worst-case obstacle speed in the frame (a stationary obstacle).
    pub v_o_max: f64,
}

pub fn to_drift_frame(v_drift: &Vec2, v_air: &Vec2, obstacle_velocities: &[Vec2], v_o_max_inertial: f64) -> FrameView {
    let moving = v_drift.norm() > 0.0;
    FrameView {
        v_air: v_air - v_drift,
        obstacle_velocities: obstacle_velocities.iter().map(|v| v - v_drift).collect(),
        v_o_max: if moving { v_drift.norm() } else { v_o_max_inertial },
    }
}

/// Vehicle and sensing constants entering the cruise-speed solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CruiseInputs {
    pub f_planar_max: f64,
    pub kd: f64,
    pub m: f64,
    pub r_s: f64,
    pub r_c: f64,
    pub dt_s: f64,
}

impl CruiseInputs {
    /// Planar acceleration left at speed `v_c` against air speed `v_air_max`.
    pub fn a_max(&self, v_c: f64, v_air_max: f64) -> f64 {
        (self.f_planar_max - self.kd * (v_c + v_air_max).powi(2)) / self.m
    }

    /// Whether `v_c` keeps authority and fits the reaction distance.
    pub fn admits(&self, v_c: f64, v_air_max: f64, v_o_max: f64) -> bool {
        let a = self.a_max(v_c, v_air_max);
        if !(a > 0.0) {
            return false;
        }
        let tau = tau_min_heading(PI, v_c, a);
        (v_c + v_o_max) * (self.dt_s + tau) <= self.r_s - self.r_c
    }
}

/// Largest cruise speed admitted by [`CruiseInputs::admits`], to [`CRUISE_TOL`].
pub fn cruise_velocity(inputs: &CruiseInputs, v_air_max: f64, v_o_max: f64) -> Result<f64, DriftError> {
    if !inputs.admits(0.0, v_air_max, v_o_max) {
        return Err(DriftError::NoControlAuthority);
    }
    let (mut lo, mut hi) = (0.0, (inputs.f_planar_max / inputs.kd).sqrt() - v_air_max);
    while hi - lo > CRUISE_TOL {
        let mid = 0.5 * (lo + hi);
        if inputs.admits(mid, v_air_max, v_o_max) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Wind-dependent clearance margin settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClearanceConfig {
    pub r_ce_min: f64,
    pub r_ce_max: f64,
    /// Delay before a smaller clearance radius is adopted [s].
    pub t_hold: f64,
}

impl Default for ClearanceConfig {
    fn default() -> Self {
        Self { r_ce_min: 0.3, r_ce_max: 1.3, t_hold: 5.0 }
    }
}

/// Tracks `r_c` with a hold-down on decreases.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceAdapter {
    pub config: ClearanceConfig,
    pub r_cv: f64,
    pub v_w_op: f64,
    r_c: f64,
    lower_since: Option<f64>,
}

impl ClearanceAdapter {
    pub fn new(config: ClearanceConfig, r_cv: f64, v_w_op: f64) -> Self {
        Self { config, r_cv, v_w_op, r_c: r_cv + config.r_ce_min, lower_since: None }
    }

    pub fn r_c(&self) -> f64 {
        self.r_c
    }

    pub fn target(&self, v_air_max: f64) -> f64 {
        let c = &self.config;
        self.r_cv + c.r_ce_min + (c.r_ce_max - c.r_ce_min) * (v_air_max / self.v_w_op).clamp(0.0, 1.0)
    }

    /// Advance to time `t` with the current wind bound and return `r_c`.
    pub fn update(&mut self, t: f64, v_air_max: f64) -> f64 {
        let target = self.target(v_air_max);
        if target >= self.r_c {
            self.r_c = target;
            self.lower_since = None;
        } else {
            let since = *self.lower_since.get_or_insert(t);
            if t - since >= self.config.t_hold {
                self.r_c = target;
                self.lower_since = None;
            }
        }
        self.r_c
    }
}

/// Clearance radius and cruise speed for the current wind bound.
pub fn update_rc_vc(
    adapter: &mut ClearanceAdapter,
    t: f64,
    est: &WindEstimate,
    inputs: &CruiseInputs,
    v_o_max: f64,
) -> Result<(f64, f64), DriftError> {
    let r_c = adapter.update(t, est.v_air_max);
    let v_c = cruise_velocity(&CruiseInputs { r_c, ..*inputs }, est.v_air_max, v_o_max)?;
    Ok((r_c, v_c))
}

/// Per-vehicle drift bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftState {
    pub mode: Mode,
    pub v_drift: Vec2,
    pub v_air_max_d: f64,
    pub v_o_max_d: f64,
    pub v_c_d: f64,
    pub r_c: f64,
    pub r_ce: f64,
    pub v_c: f64,
    pub f_planar_max: f64,
}

impl DriftState {
    pub fn normal(r_c: f64, r_ce: f64, v_c: f64, f_planar_max: f64) -> Self {
        Self { mode: Mode::Normal, v_drift: Vec2::zeros(), v_air_max_d: 0.0, v_o_max_d: 0.0, v_c_d: v_c, r_c, r_ce, v_c, f_planar_max }
    }

    /// Enter or update drift with frame-local cruise speed `v_c_d`.
    pub fn set_drift(&mut self, v_drift: Vec2, v_air_max_d: f64, v_c_d: f64) {
        self.mode = Mode::Drift;
        self.v_drift = v_drift;
        self.v_air_max_d = v_air_max_d;
        self.v_o_max_d = v_drift.norm();
        self.v_c_d = v_c_d;
        self.v_c = v_c_d + v_drift.norm();
    }

    pub fn set_normal(&mut self, v_c: f64) {
        self.mode = Mode::Normal;
        self.v_drift = Vec2::zeros();
        self.v_air_max_d = 0.0;
        self.v_o_max_d = 0.0;
        self.v_c_d = v_c;
        self.v_c = v_c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::tests::sim_a_params;
    use approx::assert_abs_diff_eq;

    fn isotropic(kd: f64) -> VehicleParams {
        // choose areas so that K_d = kd along both planar axes at rho = 1
        let mut p = sim_a_params();
        p.c_d = 1.0;
        p.drag_scale = 1.0;
        p.area = [2.0 * kd, 2.0 * kd, 0.09];
        p
    }

    #[test]
    fn still_air_hover_gives_zero_wind() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let hover = Vec3::new(0.0, 0.0, p.m * env.g);
        let (v, d) = estimate_wind_raw(&Vec3::zeros(), &Vec3::zeros(), &hover, &p, &env);
        assert_eq!(v, Vec2::zeros());
        assert_eq!(d, 0.0);
    }

    #[test]
    fn residual_drag_maps_back_to_wind() {
        let env = EnvironmentConstants { rho: 1.0, ..Default::default() };
        let p = isotropic(0.01);
        // residual (0.4, 0): the applied force is short of m a by that much
        let applied = Vec3::new(-0.4, 0.0, p.m * env.g);
        let (v, _) = estimate_wind_raw(&Vec3::zeros(), &Vec3::zeros(), &applied, &p, &env);
        assert_abs_diff_eq!(v.x, 40f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(v.x, 6.325, epsilon = 1e-3);
        assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn drag_model_round_trip() {
        let env = EnvironmentConstants::default();
        let p = sim_a_params();
        for (vel, air) in [((1.0, -0.5), (4.0, 3.0)), ((0.0, 0.0), (-7.0, 1.0)), ((2.0, 2.0), (0.0, 9.0))] {
            let vel = Vec3::new(vel.0, vel.1, 0.0);
            let air = Vec3::new(air.0, air.1, 0.0);
            let drag = crate::dynamics::drag_force(&p, &vel, &air, env.rho);
            let applied = Vec3::new(0.3, -0.2, p.m * env.g);
            let accel = (applied + drag) / p.m + env.gravity();
            let (v, _) = estimate_wind_raw(&vel, &accel, &applied, &p, &env);
            assert_abs_diff_eq!(v, planar(&air), epsilon = 1e-9);
        }
    }

    #[test]
    fn trigger_examples() {
        let trig = DriftTrigger::default();
        assert_eq!(trig.decide(Mode::Normal, 9.0, 1.0, 0.01), Mode::Normal);
        assert_eq!(trig.decide(Mode::Normal, 11.0, 1.0, 0.01), Mode::Drift);
    }

    #[test]
    fn trigger_does_not_chatter() {
        let trig = DriftTrigger::default();
        let v0 = 10.0; // threshold for f = 1, K = 0.01
        let mut mode = Mode::Normal;
        let mut switches = 0;
        for k in 0..200 {
            let v = v0 * if k % 2 == 0 { 1.05 } else { 0.95 };
            let next = trig.decide(mode, v, 1.0, 0.01);
            if next != mode {
                switches += 1;
            }
            mode = next;
        }
        assert_eq!(switches, 1);
    }

    #[test]
    fn drift_velocity_is_zero_below_threshold() {
        assert_eq!(solve_drift_velocity(&Vec2::new(5.0, 0.0), 5.0, 1.0, 0.01).unwrap(), Vec2::zeros());
    }

    #[test]
    fn bounds_alone_do_not_guarantee_authority() {
        // minimum downwind component plus a large crosswind: inside both
        // bound sets, yet the drift-frame air speed exceeds sqrt(f/K)
        let (f, kd) = (1.0, 0.01);
        let b = drift_bounds(18.0, f, kd);
        let dir = Vec2::new(0.0, 1.0);
        let v_air = dir * 18.0;
        let v = Vec2::new(10.0, b.downwind_min);
        assert!(b.contains(&v, &dir));
        assert!(kd * (v_air - v).norm_squared() > f);
        // the upwind boundary of the exact disc stays admissible
        let q = (f / kd).sqrt();
        let w = v_air + Vec2::new(q * 0.6, -q * 0.8);
        assert_abs_diff_eq!(kd * (v_air - w).norm_squared(), f, epsilon = 1e-12);
    }

    #[test]
    fn drift_velocity_minimal_norm() {
        let v_air = Vec2::new(0.0, 18.0);
        let b = drift_bounds(18.0, 1.0, 0.01);
        assert_abs_diff_eq!(b.min_norm, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.max_norm, 424f64.sqrt(), epsilon = 1e-12);
        let v = solve_drift_velocity(&v_air, 18.0, 1.0, 0.01).unwrap();
        assert_abs_diff_eq!(v, Vec2::new(0.0, 8.0), epsilon = 1e-12);
        // grid oracle: smallest admissible vector among a fine polar grid
        let dir = Vec2::new(0.0, 1.0);
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            let r = 21.0 * i as f64 / 400.0;
            for j in 0..720 {
                let a = j as f64 * PI / 360.0;
                let cand = Vec2::new(r * a.cos(), r * a.sin());
                if b.contains(&cand, &dir) {
                    best = best.min(cand.norm());
                }
            }
        }
        assert!((8.0 - 1e-9..=8.0 + 21.0 / 400.0).contains(&best), "{best}");
        assert!((v_air - v).norm() <= 10.0 + 1e-9);
    }

    #[test]
    fn degenerate_wind() {
        assert_eq!(solve_drift_velocity(&Vec2::zeros(), 18.0, 1.0, 0.01), Err(DriftError::DegenerateWind));
    }

    #[test]
    fn frame_transform_examples() {
        let id = to_drift_frame(&Vec2::zeros(), &Vec2::new(3.0, 1.0), &[Vec2::new(0.5, 0.0)], 1.0);
        assert_eq!(id.v_air, Vec2::new(3.0, 1.0));
        assert_eq!(id.obstacle_velocities, vec![Vec2::new(0.5, 0.0)]);
        assert_eq!(id.v_o_max, 1.0);
        let f = to_drift_frame(&Vec2::new(8.0, 0.0), &Vec2::new(18.0, 0.0), &[Vec2::zeros()], 1.0);
        assert_eq!(f.v_air, Vec2::new(10.0, 0.0));
        assert_eq!(f.obstacle_velocities, vec![Vec2::new(-8.0, 0.0)]);
        assert_eq!(f.v_o_max, 8.0);
    }

    fn sim_a_inputs() -> CruiseInputs {
        let env = EnvironmentConstants::default();
        let p = sim_a_params();
        CruiseInputs {
            f_planar_max: p.f_planar_max(&env),
            kd: planar_kd(&p, &Vec2::y(), env.rho),
            m: p.m,
            r_s: 12.5,
            r_c: 2.0,
            dt_s: 1.0,
        }
    }

    #[test]
    fn cruise_velocity_fails_without_authority() {
        let c = sim_a_inputs();
        let crit = (c.f_planar_max / c.kd).sqrt();
        assert_eq!(cruise_velocity(&c, crit, 1.0), Err(DriftError::NoControlAuthority));
    }

    #[test]
    fn cruise_velocity_is_the_admissibility_edge() {
        let c = sim_a_inputs();
        let v = cruise_velocity(&c, 0.0, 1.0).unwrap();
        assert!(c.admits(v, 0.0, 1.0));
        assert!(!c.admits(v + 2.0 * CRUISE_TOL, 0.0, 1.0));
    }

    #[test]
    fn clearance_ramp_and_hold() {
        let mut a = ClearanceAdapter::new(ClearanceConfig::default(), 0.5, 12.5);
        assert_abs_diff_eq!(a.update(0.0, 0.0), 0.8, epsilon = 1e-12);
        let up = a.update(1.0, 9.0);
        assert!(up > 0.8);
        for k in 0..50 {
            assert_eq!(a.update(1.1 + 0.1 * k as f64, 0.0), up);
        }
        assert_abs_diff_eq!(a.update(6.2, 0.0), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn drift_state_composes_cruise_speed() {
        let mut s = DriftState::normal(2.0, 0.3, 1.5, 2.8);
        assert_eq!(s.v_drift.norm(), 0.0);
        s.set_drift(Vec2::new(3.0, 4.0), 10.0, 0.7);
        assert_eq!(s.v_c, 0.7 + 5.0);
        assert_eq!(s.v_o_max_d, 5.0);
        s.set_normal(1.2);
        assert_eq!(s.mode, Mode::Normal);
        assert_eq!(s.v_drift, Vec2::zeros());
    }
}
