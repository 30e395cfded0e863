//! Cascaded flight controller: a RISE position loop producing a desired
//! force, extraction of thrust and attitude from that force, and a PID
//! attitude loop producing body torques.

use crate::geom::{wrap_angle, EulerAngles, Vec3};
use serde::{Deserialize, Serialize};

/// Error magnitude below which `sgn(e2)` is treated as zero.
pub const SIGN_DEADBAND: f64 = 1e-6;

fn default_tilt_limit() -> f64 {
    60f64.to_radians()
}
fn default_integral_limit() -> f64 {
    0.5
}
fn default_integral_leak() -> f64 {
    1.0
}
fn default_derivative_tau() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlGains {
    pub alpha1: f64,
    pub alpha2: f64,
    pub k_s: f64,
    pub beta: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub k_d: f64,
    /// Maximum roll/pitch magnitude [rad].
    #[serde(default = "default_tilt_limit")]
    pub tilt_limit: f64,
    /// Bound on each attitude-error integral component [rad s].
    #[serde(default = "default_integral_limit")]
    pub integral_limit: f64,
    /// Exponential decay rate of the attitude-error integral [1/s].
    #[serde(default = "default_integral_leak")]
    pub integral_leak: f64,
    /// Time constant of the derivative filter [s].
    #[serde(default = "default_derivative_tau")]
    pub derivative_tau: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        Self {
            alpha1: 0.1,
            alpha2: 1.0,
            k_s: 0.05,
            beta: 0.25,
            k_p: 0.8,
            k_i: 0.2,
            k_d: 0.1,
            tilt_limit: default_tilt_limit(),
            integral_limit: default_integral_limit(),
            integral_leak: default_integral_leak(),
            derivative_tau: default_derivative_tau(),
        }
    }
}

impl ControlGains {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.k_s > 0.0) {
            return Err("k_s must be > 0".into());
        }
        if !(self.alpha2 > 0.5) {
            return Err("alpha2 must be > 1/2".into());
        }
        if !(self.alpha1 > 0.0) || !(self.beta >= 0.0) {
            return Err("alpha1 must be > 0 and beta >= 0".into());
        }
        if !(self.k_p > 0.0 && self.k_i > 0.0 && self.k_d > 0.0) {
            return Err("k_p, k_i, k_d must be > 0".into());
        }
        if !(self.tilt_limit > 0.0 && self.tilt_limit < std::f64::consts::FRAC_PI_2) {
            return Err("tilt_limit must be in (0, pi/2)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RiseState {
    pub nu: Vec3,
    pub e2_initial: Vec3,
    pub integral_q: Vec3,
    prev_error_q: Option<Vec3>,
    deriv_q: Vec3,
}

impl RiseState {
    /// State anchored at the current error so that the first output equals
    /// `prev_output` (bumpless activation or frame switch).
    pub fn anchored(e2: Vec3, prev_output: Vec3, feed_forward: Vec3) -> Self {
        Self { nu: prev_output - feed_forward, e2_initial: e2, ..Self::default() }
    }

    pub fn reanchor(&mut self, e2: Vec3, prev_output: Vec3, feed_forward: Vec3) {
        self.nu = prev_output - feed_forward;
        self.e2_initial = e2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlCommand {
    pub f_cmd: f64,
    pub q_d: EulerAngles,
    /// Body torque [N m].
    pub u: Vec3,
}

/// Desired-trajectory values used by the position loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingReference {
    pub p_d: Vec3,
    pub v_d: Vec3,
}

pub fn tracking_error(p: &Vec3, v: &Vec3, r: &TrackingReference, alpha1: f64) -> Vec3 {
    (r.v_d - v) + (r.p_d - p) * alpha1
}

fn sgn_deadband(x: f64) -> f64 {
    if x.abs() < SIGN_DEADBAND {
        0.0
    } else {
        x.signum()
    }
}

/// RISE outer loop: `F = (k_s+1) e2 - (k_s+1) e2(0) + nu + m g_ff`, with `nu`
/// advanced by one explicit-Euler step of `(k_s+1) a2 e2 + beta sgn(e2)`.
#[allow(clippy::too_many_arguments)]
pub fn rise_force(
    p: &Vec3,
    v: &Vec3,
    reference: &TrackingReference,
    gains: &ControlGains,
    rise: &mut RiseState,
    mass: f64,
    g: f64,
    dt: f64,
) -> Vec3 {
    let e2 = tracking_error(p, v, reference, gains.alpha1);
    let ks1 = gains.k_s + 1.0;
    let sgn = e2.map(sgn_deadband);
    rise.nu += (e2 * (ks1 * gains.alpha2) + sgn * gains.beta) * dt;
    (e2 - rise.e2_initial) * ks1 + rise.nu + gravity_feed_forward(mass, g)
}

pub fn gravity_feed_forward(mass: f64, g: f64) -> Vec3 {
    Vec3::new(0.0, 0.0, mass * g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCommand {
    pub f_cmd: f64,
    pub q_d: EulerAngles,
    /// Magnitude of the force that was asked for, before any clamping [N].
    pub f_demand: f64,
    /// The demand met or exceeded the thrust cap.
    pub saturated: bool,
    /// The demand had no upward component; hover attitude was substituted.
    pub degenerate: bool,
}

/// Thrust magnitude and attitude realizing `force` with body-z thrust.
///
/// Tilt beyond `tilt_limit` is removed by shrinking the horizontal part
/// (vertical part kept), then the magnitude is clamped to `f_max` along the
/// resulting direction.
pub fn attitude_from_force(force: &Vec3, yaw_d: f64, f_max: f64, tilt_limit: f64) -> AttitudeCommand {
    let f_demand = force.norm();
    if force.z <= 1e-9 * f_demand.max(1.0) {
        return AttitudeCommand {
            f_cmd: 0.0,
            q_d: EulerAngles::new(0.0, 0.0, yaw_d),
            f_demand,
            saturated: f_demand >= f_max,
            degenerate: true,
        };
    }
    let mut f = *force;
    let horiz = force.x.hypot(force.y);
    let max_horiz = force.z * tilt_limit.tan();
    if horiz > max_horiz {
        let s = max_horiz / horiz;
        f.x *= s;
        f.y *= s;
    }
    let mag = f.norm();
    let b3 = f / mag;
    // body z expressed in the yaw-aligned frame
    let (sy, cy) = yaw_d.sin_cos();
    let bx = cy * b3.x + sy * b3.y;
    let by = -sy * b3.x + cy * b3.y;
    let roll = (-by).clamp(-1.0, 1.0).asin();
    let theta = bx.atan2(b3.z);
    AttitudeCommand {
        f_cmd: mag.min(f_max),
        q_d: EulerAngles::new(roll, -theta, yaw_d),
        f_demand,
        saturated: f_demand >= f_max,
        degenerate: false,
    }
}

/// Attitude error `q_d - q`, yaw wrapped.
pub fn attitude_error(q_d: &EulerAngles, q: &EulerAngles) -> Vec3 {
    Vec3::new(q_d.roll - q.roll, q_d.pitch - q.pitch, wrap_angle(q_d.yaw - q.yaw))
}

/// PID attitude loop on `q_d - q`: trapezoidal leaky integral with clamp and
/// a first-order filtered derivative. Returns body torque; positive pitch is
/// a negative rotation about body y.
pub fn pid_torque(q_d: &EulerAngles, q: &EulerAngles, gains: &ControlGains, rise: &mut RiseState, dt: f64) -> Vec3 {
    let e = attitude_error(q_d, q);
    let prev = rise.prev_error_q.unwrap_or(e);
    let decay = (-gains.integral_leak * dt).exp();
    let lim = gains.integral_limit;
    rise.integral_q = (rise.integral_q * decay + (e + prev) * (0.5 * dt)).map(|x| x.clamp(-lim, lim));
    let raw = (e - prev) / dt;
    rise.deriv_q += (raw - rise.deriv_q) * (dt / (gains.derivative_tau + dt));
    rise.prev_error_q = Some(e);
    let u = e * gains.k_p + rise.integral_q * gains.k_i + rise.deriv_q * gains.k_d;
    Vec3::new(u.x, -u.y, u.z)
}
