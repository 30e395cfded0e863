//! Quadrotor rigid-body dynamics with quadratic aerodynamic drag.
//!
//! Translational: `m p'' = f + m g + f_w + d_p` with body-z thrust
//! `f = R_IB^T (0, 0, f_cmd)`.
//! Rotational: `J w' = u - w x J w + R_IB d_w` with `w` in the body frame.

use crate::controller::ControlCommand;
use crate::geom::{orthonormalize, skew, EnvironmentConstants, Mat3, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative-wind speed below which the wind direction is undefined.
pub const MIN_RELATIVE_WIND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("relative wind direction is undefined")]
    UndefinedDirection,
    #[error("non-finite state at t = {t:.3} s: {what}")]
    NonFiniteState { t: f64, what: String },
    #[error("invalid vehicle parameters: {0}")]
    InvalidParams(String),
}

fn one() -> f64 {
    1.0
}

fn default_inertia() -> [[f64; 3]; 3] {
    [[0.0037, 0.0, 0.0], [0.0, 0.0037, 0.0], [0.0, 0.0, 0.007]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    pub id: u32,
    /// Mass [kg].
    pub m: f64,
    /// Inertia matrix rows [kg m^2].
    #[serde(default = "default_inertia")]
    pub inertia: [[f64; 3]; 3],
    /// Nominal maximum total thrust [N].
    pub f_max: f64,
    /// Fraction of `f_max` actually available (models unmodelled thrust losses).
    #[serde(default = "one")]
    pub thrust_derate: f64,
    pub c_d: f64,
    /// Reference areas along body x, y, z [m^2].
    pub area: [f64; 3],
    /// Multiplier on the drag model.
    #[serde(default = "one")]
    pub drag_scale: f64,
    /// Vehicle-core clearance radius [m].
    pub r_cv: f64,
    /// Maximum wind speed the vehicle can operate in [m/s].
    pub v_w_op: f64,
    /// Geometric vehicle radius [m]; used as the peer footprint in sensor scans.
    #[serde(default = "default_r_min")]
    pub r_min: f64,
}

fn default_r_min() -> f64 {
    0.09
}

impl VehicleParams {
    pub fn inertia_matrix(&self) -> Mat3 {
        let j = &self.inertia;
        Mat3::new(j[0][0], j[0][1], j[0][2], j[1][0], j[1][1], j[1][2], j[2][0], j[2][1], j[2][2])
    }

    /// Thrust actually available after derating [N].
    pub fn f_max_eff(&self) -> f64 {
        self.f_max * self.thrust_derate
    }

    /// In-plane thrust left after supporting the weight [N].
    pub fn f_planar_max(&self, env: &EnvironmentConstants) -> f64 {
        let w = self.m * env.g;
        (self.f_max_eff().powi(2) - w * w).max(0.0).sqrt()
    }

    pub fn validate(&self, env: &EnvironmentConstants) -> Result<(), DynamicsError> {
        let bad = |s: &str| Err(DynamicsError::InvalidParams(format!("vehicle {}: {s}", self.id)));
        if !(self.m > 0.0) {
            return bad("m must be > 0");
        }
        if !(self.thrust_derate > 0.0 && self.thrust_derate <= 1.0) {
            return bad("thrust_derate must be in (0, 1]");
        }
        if !(self.f_max_eff() > self.m * env.g) {
            return bad("available thrust cannot support the weight");
        }
        if !(self.c_d > 0.0) || !(self.drag_scale > 0.0) {
            return bad("c_d and drag_scale must be > 0");
        }
        if !self.area.iter().all(|&a| a > 0.0) {
            return bad("area components must be > 0");
        }
        if !(self.r_cv > 0.0) || !(self.v_w_op > 0.0) {
            return bad("r_cv and v_w_op must be > 0");
        }
        let j = self.inertia_matrix();
        if (j - j.transpose()).abs().max() > 1e-12 || j.cholesky().is_none() {
            return bad("inertia must be symmetric positive definite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub p: Vec3,
    pub v: Vec3,
    /// Inertial-to-body rotation.
    pub r_ib: Mat3,
    /// Body angular rate [rad/s].
    pub omega: Vec3,
}

impl VehicleState {
    pub fn at_rest(p: Vec3) -> Self {
        Self { p, v: Vec3::zeros(), r_ib: Mat3::identity(), omega: Vec3::zeros() }
    }

    pub fn body_to_inertial(&self) -> Mat3 {
        self.r_ib.transpose()
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.v.iter()).chain(self.omega.iter()).chain(self.r_ib.iter()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeWind {
    /// `p' - v_air`.
    pub v_w: Vec3,
    pub magnitude: f64,
    /// Unit vector along `v_w`; `None` when the magnitude is below [`MIN_RELATIVE_WIND`].
    pub x_w: Option<Vec3>,
}

impl RelativeWind {
    pub fn new(velocity: &Vec3, v_air: &Vec3) -> Self {
        let v_w = velocity - v_air;
        let magnitude = v_w.norm();
        let x_w = (magnitude >= MIN_RELATIVE_WIND).then(|| v_w / magnitude);
        Self { v_w, magnitude, x_w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DisturbanceInputs {
    /// Translational disturbance force, excluding drag [N].
    pub d_p: Vec3,
    /// Disturbance torque in the inertial frame [N m].
    pub d_omega: Vec3,
}

/// Projected area of the vehicle onto the plane normal to `x_w`.
pub fn effective_area(params: &VehicleParams, x_w: &Vec3) -> f64 {
    params.area[0] * x_w.x.abs() + params.area[1] * x_w.y.abs() + params.area[2] * x_w.z.abs()
}

/// Quadratic drag gain `K_d = 1/2 rho C_d A_eff(x_W)` [kg/m].
pub fn drag_coefficient_kd(params: &VehicleParams, x_w: Option<&Vec3>, rho: f64) -> Result<f64, DynamicsError> {
    let x_w = x_w.ok_or(DynamicsError::UndefinedDirection)?;
    Ok(0.5 * rho * params.c_d * effective_area(params, x_w) * params.drag_scale)
}

/// Drag force `-K_d |v_w| v_w` [N]; zero for vanishing relative wind.
pub fn drag_force(params: &VehicleParams, velocity: &Vec3, v_air: &Vec3, rho: f64) -> Vec3 {
    let rel = RelativeWind::new(velocity, v_air);
    match drag_coefficient_kd(params, rel.x_w.as_ref(), rho) {
        Ok(kd) => -rel.v_w * (kd * rel.magnitude),
        Err(_) => Vec3::zeros(),
    }
}

#[derive(Clone, Copy)]
struct Deriv {
    dp: Vec3,
    dv: Vec3,
    dr: Mat3,
    dw: Vec3,
}

struct Rhs<'a> {
    params: &'a VehicleParams,
    j: Mat3,
    j_inv: Mat3,
    f_cmd: f64,
    torque: Vec3,
    wind: Vec3,
    dist: &'a DisturbanceInputs,
    env: &'a EnvironmentConstants,
}

impl Rhs<'_> {
    fn eval(&self, v: &Vec3, r_ib: &Mat3, w: &Vec3) -> Deriv {
        let m = self.params.m;
        let thrust = r_ib.transpose() * Vec3::new(0.0, 0.0, self.f_cmd);
        let drag = drag_force(self.params, v, &self.wind, self.env.rho);
        let dv = (thrust + self.env.gravity() * m + drag + self.dist.d_p) / m;
        let dr = -skew(w) * r_ib;
        let dw = self.j_inv * (self.torque - w.cross(&(self.j * w)) + r_ib * self.dist.d_omega);
        Deriv { dp: *v, dv, dr, dw }
    }
}

/// Thrust after clamping to `[0, f_max_eff]`.
pub fn saturate_thrust(params: &VehicleParams, f_cmd: f64) -> f64 {
    f_cmd.clamp(0.0, params.f_max_eff())
}

/// One fourth-order Runge-Kutta step with wind and inputs held constant.
#[allow(clippy::too_many_arguments)]
pub fn step(
    state: &VehicleState,
    params: &VehicleParams,
    command: &ControlCommand,
    wind: &Vec3,
    dist: &DisturbanceInputs,
    dt: f64,
    env: &EnvironmentConstants,
) -> Result<VehicleState, DynamicsError> {
    let j = params.inertia_matrix();
    let j_inv = j.try_inverse().ok_or_else(|| DynamicsError::InvalidParams("singular inertia".into()))?;
    let rhs = Rhs {
        params,
        j,
        j_inv,
        f_cmd: saturate_thrust(params, command.f_cmd),
        torque: command.u,
        wind: *wind,
        dist,
        env,
    };
    let s = state;
    let k1 = rhs.eval(&s.v, &s.r_ib, &s.omega);
    let h = 0.5 * dt;
    let k2 = rhs.eval(&(s.v + k1.dv * h), &(s.r_ib + k1.dr * h), &(s.omega + k1.dw * h));
    let k3 = rhs.eval(&(s.v + k2.dv * h), &(s.r_ib + k2.dr * h), &(s.omega + k2.dw * h));
    let k4 = rhs.eval(&(s.v + k3.dv * dt), &(s.r_ib + k3.dr * dt), &(s.omega + k3.dw * dt));
    let w6 = dt / 6.0;
    let next = VehicleState {
        p: s.p + (k1.dp + k2.dp * 2.0 + k3.dp * 2.0 + k4.dp) * w6,
        v: s.v + (k1.dv + k2.dv * 2.0 + k3.dv * 2.0 + k4.dv) * w6,
        r_ib: orthonormalize(&(s.r_ib + (k1.dr + k2.dr * 2.0 + k3.dr * 2.0 + k4.dr) * w6)),
        omega: s.omega + (k1.dw + k2.dw * 2.0 + k3.dw * 2.0 + k4.dw) * w6,
    };
    if !next.is_finite() {
        return Err(DynamicsError::NonFiniteState { t: f64::NAN, what: format!("vehicle {}", params.id) });
    }
    Ok(next)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geom::EulerAngles;
    use approx::assert_abs_diff_eq;

    pub(crate) fn sim_a_params() -> VehicleParams {
        VehicleParams {
            id: 1,
            m: 0.54,
            inertia: default_inertia(),
            f_max: 15.0,
            thrust_derate: 1.0,
            c_d: 0.41,
            area: [0.04, 0.04, 0.09],
            drag_scale: 1.0,
            r_cv: 0.3,
            v_w_op: 20.0,
            r_min: 0.09,
        }
    }

    fn hover_cmd(p: &VehicleParams) -> ControlCommand {
        ControlCommand { f_cmd: p.m * 9.81, ..Default::default() }
    }

    #[test]
    fn kd_examples() {
        let p = sim_a_params();
        let kx = drag_coefficient_kd(&p, Some(&Vec3::x()), 1.225).unwrap();
        assert_abs_diff_eq!(kx, 0.5 * 1.225 * 0.41 * 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(kx, 0.010045, epsilon = 1e-6);
        let kz = drag_coefficient_kd(&p, Some(&Vec3::z()), 1.225).unwrap();
        assert_abs_diff_eq!(kz, 0.02260, epsilon = 1e-5);
        assert_eq!(drag_coefficient_kd(&p, None, 1.225), Err(DynamicsError::UndefinedDirection));
    }

    #[test]
    fn kd_axis_symmetry_for_equal_areas() {
        let mut p = sim_a_params();
        p.area = [0.05; 3];
        let a = drag_coefficient_kd(&p, Some(&Vec3::x()), 1.2).unwrap();
        let b = drag_coefficient_kd(&p, Some(&-Vec3::y()), 1.2).unwrap();
        let c = drag_coefficient_kd(&p, Some(&Vec3::z()), 1.2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn drag_pushes_downwind_quadratically() {
        let mut p = sim_a_params();
        // choose area so that K_d = 0.01 exactly along x
        p.area[0] = 0.01 / (0.5 * 1.225 * 0.41);
        let f = drag_force(&p, &Vec3::zeros(), &Vec3::new(10.0, 0.0, 0.0), 1.225);
        assert_abs_diff_eq!(f, Vec3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        let f2 = drag_force(&p, &Vec3::zeros(), &Vec3::new(20.0, 0.0, 0.0), 1.225);
        assert_abs_diff_eq!(f2.norm(), 4.0 * f.norm(), epsilon = 1e-12);
        let v = Vec3::new(2.0, -1.0, 0.5);
        assert_eq!(drag_force(&p, &v, &v, 1.225), Vec3::zeros());
    }

    #[test]
    fn hover_is_an_equilibrium() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let mut s = VehicleState::at_rest(Vec3::new(1.0, 2.0, 3.0));
        let s0 = s.clone();
        let cmd = hover_cmd(&p);
        s = step(&s, &p, &cmd, &Vec3::zeros(), &DisturbanceInputs::default(), 0.01, &env).unwrap();
        assert!((s.p - s0.p).norm() < 1e-9 && s.v.norm() < 1e-9);
        for _ in 0..1000 {
            s = step(&s, &p, &cmd, &Vec3::zeros(), &DisturbanceInputs::default(), 0.01, &env).unwrap();
        }
        assert!((s.p - s0.p).norm() < 1e-6);
    }

    #[test]
    fn free_fall() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let mut q = p.clone();
        q.area = [1e-12; 3];
        let s = step(
            &VehicleState::at_rest(Vec3::new(0.0, 0.0, 10.0)),
            &q,
            &ControlCommand::default(),
            &Vec3::zeros(),
            &DisturbanceInputs::default(),
            0.01,
            &env,
        )
        .unwrap();
        assert_abs_diff_eq!(s.v.z, -9.81 * 0.01, epsilon = 1e-9);
    }

    #[test]
    fn side_wind_initial_acceleration() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let wind = Vec3::new(10.0, 0.0, 0.0);
        let dt = 0.01;
        let s = step(&VehicleState::at_rest(Vec3::zeros()), &p, &hover_cmd(&p), &wind, &DisturbanceInputs::default(), dt, &env)
            .unwrap();
        let a0 = drag_force(&p, &Vec3::zeros(), &wind, env.rho).x / p.m;
        assert_abs_diff_eq!(s.v.x / dt, a0, epsilon = 10.0 * dt * a0);
        assert!(s.v.x > 0.0);
    }

    #[test]
    fn thrust_is_saturated_before_integration() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let big = ControlCommand { f_cmd: 1e6, ..Default::default() };
        let s = step(&VehicleState::at_rest(Vec3::zeros()), &p, &big, &Vec3::zeros(), &DisturbanceInputs::default(), 0.01, &env)
            .unwrap();
        let a_max = p.f_max / p.m - 9.81;
        // drag builds up during the step and shaves a little off
        assert!(s.v.z <= a_max * 0.01 && s.v.z > 0.999 * a_max * 0.01);
        assert_eq!(saturate_thrust(&p, -3.0), 0.0);
    }

    #[test]
    fn rotation_stays_orthonormal_while_spinning() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let mut s = VehicleState::at_rest(Vec3::zeros());
        s.r_ib = EulerAngles::new(0.3, 0.2, -0.4).body_to_inertial().transpose();
        s.omega = Vec3::new(3.0, -2.0, 5.0);
        let cmd = ControlCommand { f_cmd: 2.0, u: Vec3::new(1e-3, 2e-3, -1e-3), ..Default::default() };
        for _ in 0..500 {
            s = step(&s, &p, &cmd, &Vec3::zeros(), &DisturbanceInputs::default(), 0.01, &env).unwrap();
            let rtr = s.r_ib.transpose() * s.r_ib;
            assert!((rtr - Mat3::identity()).abs().max() < 1e-9);
            assert!((s.r_ib.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn torque_free_spin_conserves_angular_momentum() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let mut s = VehicleState::at_rest(Vec3::zeros());
        s.omega = Vec3::new(1.0, 0.5, 2.0);
        let j = p.inertia_matrix();
        let h0 = s.body_to_inertial() * (j * s.omega);
        for _ in 0..200 {
            s = step(&s, &p, &ControlCommand::default(), &Vec3::zeros(), &DisturbanceInputs::default(), 0.005, &env).unwrap();
        }
        let h1 = s.body_to_inertial() * (j * s.omega);
        assert!((h1 - h0).norm() < 1e-6 * h0.norm());
    }

    #[test]
    fn energy_decreases_under_drag_only() {
        let p = sim_a_params();
        let env = EnvironmentConstants::default();
        let mut s = VehicleState::at_rest(Vec3::new(0.0, 0.0, 100.0));
        s.v = Vec3::new(8.0, -3.0, 2.0);
        let energy = |s: &VehicleState| 0.5 * p.m * s.v.norm_squared() + p.m * env.g * s.p.z;
        let mut e = energy(&s);
        for _ in 0..300 {
            s = step(&s, &p, &ControlCommand::default(), &Vec3::zeros(), &DisturbanceInputs::default(), 0.01, &env).unwrap();
            let e1 = energy(&s);
            assert!(e1 <= e + 1e-9);
            e = e1;
        }
    }

    #[test]
    fn validation_rejects_bad_params() {
        let env = EnvironmentConstants::default();
        assert!(sim_a_params().validate(&env).is_ok());
        let mut p = sim_a_params();
        p.f_max = 1.0;
        assert!(p.validate(&env).is_err());
        let mut p = sim_a_params();
        p.inertia[0][1] = 1.0;
        assert!(p.validate(&env).is_err());
    }

    #[test]
    fn f_planar_from_thrust_budget() {
        let env = EnvironmentConstants::default();
        let p = sim_a_params();
        let w = 0.54 * 9.81;
        assert_abs_diff_eq!(p.f_planar_max(&env), (225.0f64 - w * w).sqrt(), epsilon = 1e-12);
    }
}
