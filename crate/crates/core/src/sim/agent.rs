//! One simulated vehicle: wind estimation, mode switching, course planning,
//! goal approach and the flight controller.

use super::log::EventKind;
use super::scenario::{PlannerConfig, VehicleSpec};
use crate::controller::{attitude_from_force, pid_torque, rise_force, ControlCommand, ControlGains, RiseState, TrackingReference};
use crate::driftframe::{
    cruise_velocity, planar_kd, solve_drift_velocity, ClearanceAdapter, CruiseInputs, DriftState, Mode, WindEstimate,
    WindEstimator,
};
use crate::dynamics::{drag_force, saturate_thrust, step, DisturbanceInputs, DynamicsError, VehicleParams, VehicleState};
use crate::geom::{heading_of, lift, planar, unit_from_angle, wrap_angle, EnvironmentConstants, EulerAngles, Vec2, Vec3};
use crate::trajgen::course::PlannerLimits;
use crate::trajgen::sigmoid::c3;
use crate::trajgen::sigmoid::EPS_S;
use crate::trajgen::{plan_course_change, rank_vehicles, ClusterTracker, CourseRequest, MovingPoint, PeerReport, ScanReturn, TrajError, Trajectory};
use std::collections::BTreeMap;

/// Drift velocity is refreshed when the new solution is larger by this much [m/s].
const DRIFT_REFRESH: f64 = 0.5;
/// Final desired position closer than this to the goal needs no creep [m].
const SETTLE_TOL: f64 = 0.1;
const MAX_CREEPS: u32 = 4;
/// Shortest in-place turn [s].
const TURN_IN_PLACE: f64 = 1.0;
/// Heading misalignment that prevents a direct braking approach [rad].
const BRAKE_ALIGN: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Cruise,
    Braking,
    Creep,
    Holding,
}

#[derive(Debug, Clone)]
struct PeerSeen {
    report: PeerReport,
    t_seen: f64,
}

/// Shared run-wide settings an agent needs each tick.
#[derive(Debug, Clone, Copy)]
pub struct Context<'a> {
    pub env: &'a EnvironmentConstants,
    pub planner: &'a PlannerConfig,
    pub dt_s: f64,
    pub dt_c: f64,
    pub dt_inner: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub id: u32,
    pub params: VehicleParams,
    pub gains: ControlGains,
    pub drift_enabled: bool,
    pub goal: Vec2,
    pub z_ref: f64,
    pub state: VehicleState,
    pub crashed: bool,
    pub drift: DriftState,
    pub command: ControlCommand,
    pub saturated: bool,
    traj: Trajectory,
    rise: RiseState,
    force_sum: Vec3,
    force_n: usize,
    estimator: WindEstimator,
    estimate: Option<WindEstimate>,
    clearance: ClearanceAdapter,
    tracker: ClusterTracker,
    peers: BTreeMap<u32, PeerSeen>,
    phase: Phase,
    creeps: u32,
    a_max: f64,
    authority: bool,
    replan: bool,
    events: Vec<(EventKind, String)>,
}

impl Agent {
    pub fn new(spec: &VehicleSpec, ctx: &Context) -> Result<Self, TrajError> {
        let params = spec.params.clone();
        let start = spec.start;
        let heading = heading_of(&(spec.goal - planar(&start)));
        let clearance = ClearanceAdapter::new(ctx.planner.clearance, params.r_cv, params.v_w_op);
        let r_c = clearance.r_c();
        let f_pl = params.f_planar_max(ctx.env);
        let mut agent = Self {
            id: params.id,
            gains: spec.gains.clone(),
            drift_enabled: spec.drift_enabled,
            goal: spec.goal,
            z_ref: start.z,
            state: VehicleState::at_rest(start),
            crashed: false,
            drift: DriftState::normal(r_c, r_c - params.r_cv, 0.0, f_pl),
            command: ControlCommand { f_cmd: params.m * ctx.env.g, ..Default::default() },
            saturated: false,
            traj: Trajectory::new(0.0, planar(&start), start.z, heading, 0.0, Vec2::zeros(), ctx.dt_c),
            rise: RiseState::default(),
            force_sum: Vec3::zeros(),
            force_n: 0,
            estimator: WindEstimator::new(ctx.planner.tau_filter, ctx.planner.wind_window),
            estimate: None,
            clearance,
            tracker: ClusterTracker::new(ctx.planner.cluster),
            peers: BTreeMap::new(),
            phase: Phase::Cruise,
            creeps: 0,
            a_max: 0.0,
            authority: true,
            replan: true,
            events: Vec::new(),
            params,
        };
        let inputs = agent.cruise_inputs(ctx, r_c);
        let v_c = cruise_velocity(&inputs, 0.0, ctx.planner.v_o_max).map_err(|_| TrajError::NoAuthority)?;
        agent.a_max = inputs.a_max(v_c, 0.0);
        agent.drift.set_normal(v_c);
        Ok(agent)
    }

    pub fn take_events(&mut self) -> Vec<(EventKind, String)> {
        std::mem::take(&mut self.events)
    }

    pub fn estimate(&self) -> Option<WindEstimate> {
        self.estimate
    }

    /// Desired position and velocity at `t`.
    pub fn reference(&self, t: f64) -> TrackingReference {
        let s = self.traj.sample(t);
        TrackingReference { p_d: s.p, v_d: s.v }
    }

    fn cruise_inputs(&self, ctx: &Context, r_c: f64) -> CruiseInputs {
        let dir = self.estimate.map(|e| e.v_air).unwrap_or_else(Vec2::zeros);
        CruiseInputs {
            f_planar_max: self.params.f_planar_max(ctx.env),
            kd: planar_kd(&self.params, &dir, ctx.env.rho),
            m: self.params.m,
            r_s: ctx.planner.r_s,
            r_c,
            dt_s: ctx.dt_s,
        }
    }

    /// What this vehicle broadcasts at time `t`.
    pub fn report(&self, t: f64) -> PeerReport {
        let r = self.reference(t);
        PeerReport {
            id: self.id,
            position: planar(&self.state.p),
            velocity: planar(&self.state.v),
            v_c: self.drift.v_c,
            v_d: if self.crashed { Vec2::zeros() } else { planar(&r.v_d) },
            r_c: self.drift.r_c,
            v_w_op: self.params.v_w_op,
        }
    }

    /// Wind estimate, clearance radius, cruise speed and mode for this tick.
    pub fn update_estimates(&mut self, t: f64, ctx: &Context) {
        if self.crashed {
            return;
        }
        let mean_force = if self.force_n > 0 { self.force_sum / self.force_n as f64 } else { Vec3::zeros() };
        self.force_sum = Vec3::zeros();
        self.force_n = 0;
        let v = self.state.v;
        let est = match self.estimator.update(t, &v, &mean_force, &self.params, ctx.env) {
            Ok(Some(e)) => e,
            _ => return,
        };
        self.estimate = Some(est);
        let r_c = self.clearance.update(t, est.v_air_max);
        let inputs = self.cruise_inputs(ctx, r_c);
        let mode = if self.drift_enabled {
            ctx.planner.trigger.decide(self.drift.mode, est.v_air_max, inputs.f_planar_max, inputs.kd)
        } else {
            Mode::Normal
        };
        self.drift.r_c = r_c;
        self.drift.r_ce = r_c - self.params.r_cv;
        match (self.drift.mode, mode) {
            (_, Mode::Drift) => self.drift_tick(t, &est, &inputs, ctx),
            (Mode::Drift, Mode::Normal) => {
                self.exit_drift(t, &est, ctx);
                self.normal_tick(&est, &inputs, ctx);
            }
            (Mode::Normal, Mode::Normal) => self.normal_tick(&est, &inputs, ctx),
        }
    }

    fn normal_tick(&mut self, est: &WindEstimate, inputs: &CruiseInputs, ctx: &Context) {
        match cruise_velocity(inputs, est.v_air_max, ctx.planner.v_o_max) {
            Ok(v_c) => {
                self.drift.set_normal(v_c);
                self.a_max = inputs.a_max(v_c, est.v_air_max);
                self.authority = true;
            }
            Err(_) => {
                if self.authority {
                    self.events.push((EventKind::NoControlAuthority, format!("v_air_max={:.3}", est.v_air_max)));
                }
                self.authority = false;
            }
        }
    }

    fn drift_tick(&mut self, t: f64, est: &WindEstimate, inputs: &CruiseInputs, ctx: &Context) {
        let budget = ctx.planner.drift_budget * inputs.f_planar_max;
        let Ok(v_new) = solve_drift_velocity(&est.v_air, est.v_air_max, budget, inputs.kd) else {
            return;
        };
        let entering = self.drift.mode == Mode::Normal;
        let grows = v_new.norm() > self.drift.v_drift.norm() + DRIFT_REFRESH;
        let v_drift = if entering || grows { v_new } else { self.drift.v_drift };
        let dir = if est.v_air.norm() > 0.0 { est.v_air / est.v_air.norm() } else { Vec2::zeros() };
        let v_air_max_d = (dir * est.v_air_max - v_drift).norm();
        let v_c_d = match cruise_velocity(inputs, v_air_max_d, v_drift.norm()) {
            Ok(v) => {
                self.authority = true;
                v
            }
            Err(_) => {
                if self.authority {
                    self.events.push((EventKind::NoControlAuthority, format!("drift frame v_air_max={v_air_max_d:.3}")));
                }
                self.authority = false;
                0.0
            }
        };
        if entering || grows {
            let kind = if entering { EventKind::DriftEnter } else { EventKind::DriftUpdate };
            let b = crate::driftframe::drift_bounds(est.v_air_max, inputs.f_planar_max, inputs.kd);
            self.events.push((
                kind,
                format!(
                    "v_drift=({:.3},{:.3}) bounds=[{:.3},{:.3}] v_air_max={:.3}",
                    v_drift.x, v_drift.y, b.min_norm, b.max_norm, est.v_air_max
                ),
            ));
            self.rebase(t, planar(&self.state.p), self.traj.sample(t).heading, 0.0, v_drift, est, ctx);
        }
        self.drift.set_drift(v_drift, v_air_max_d, v_c_d);
        if self.authority {
            self.a_max = inputs.a_max(v_c_d, v_air_max_d);
        }
    }

    fn exit_drift(&mut self, t: f64, est: &WindEstimate, ctx: &Context) {
        let r = self.reference(t);
        let v = planar(&r.v_d);
        let heading = if v.norm() > 1e-9 { heading_of(&v) } else { self.traj.sample(t).heading };
        self.events.push((EventKind::DriftExit, format!("v_air_max={:.3}", est.v_air_max)));
        self.rebase(t, planar(&self.state.p), heading, v.norm(), Vec2::zeros(), est, ctx);
    }

    /// Restart the trajectory at `anchor` in a frame moving at
    /// `frame_velocity`, and reset the position loop to the drag expected
    /// at the new desired velocity.
    #[allow(clippy::too_many_arguments)]
    fn rebase(&mut self, t: f64, anchor: Vec2, heading: f64, speed: f64, frame_velocity: Vec2, est: &WindEstimate, ctx: &Context) {
        self.traj = Trajectory::new(t, anchor, self.z_ref, heading, speed, frame_velocity, ctx.dt_c);
        let v_d = frame_velocity + unit_from_angle(heading) * speed;
        let hold = -drag_force(&self.params, &lift(&v_d, 0.0), &lift(&est.v_air, 0.0), ctx.env.rho);
        self.rise.nu = Vec3::new(hold.x, hold.y, self.rise.nu.z);
        self.rise.e2_initial = Vec3::zeros();
        self.phase = Phase::Cruise;
        self.creeps = 0;
        self.replan = true;
    }

    /// Record what the sensor and radios delivered this sensing period.
    pub fn sense(&mut self, t: f64, scan: &[ScanReturn], reports: &[PeerReport], ctx: &Context) {
        if self.crashed {
            return;
        }
        for r in reports {
            self.peers.insert(r.id, PeerSeen { report: r.clone(), t_seen: t });
        }
        // keep last-known data for one sensing period, then drop
        self.peers.retain(|_, p| t - p.t_seen <= ctx.dt_s + 1e-9);
        let p_d = planar(&self.reference(t).p_d);
        let clusters = self.tracker.update(&planar(&self.state.p), scan, &p_d, ctx.dt_s);
        self.plan(t, clusters, ctx);
    }

    /// Whether a re-plan was requested outside the sensing schedule.
    pub fn wants_replan(&self) -> bool {
        self.replan
    }

    fn plan(&mut self, t: f64, clusters: Vec<crate::trajgen::ObstacleCluster>, ctx: &Context) {
        self.replan = false;
        if self.phase != Phase::Cruise || !self.authority || !(self.a_max > 0.0) {
            return;
        }
        self.traj.prune(t);
        let s = self.traj.sample(t);
        let fv = self.traj.frame_velocity;
        let p = planar(&s.p);
        let local_v = planar(&s.v) - fv;
        let v_c = if self.drift.mode == Mode::Drift { self.drift.v_c_d } else { self.drift.v_c };
        if !(v_c > 0.0) {
            return;
        }
        let clusters: Vec<_> = clusters.iter().map(|c| c.in_frame(&fv)).collect();
        let me = PeerReport {
            id: self.id,
            position: planar(&self.state.p),
            velocity: planar(&self.state.v),
            v_c: self.drift.v_c,
            v_d: if local_v.norm() > 1e-6 { local_v + fv } else { unit_from_angle(s.heading) * v_c + fv },
            r_c: self.drift.r_c,
            v_w_op: self.params.v_w_op,
        };
        let seen: Vec<PeerReport> = self
            .peers
            .values()
            .map(|p| {
                let age = t - p.t_seen;
                PeerReport { position: p.report.position + p.report.v_d * age, ..p.report.clone() }
            })
            .collect();
        let v_air_est = self.estimate.map(|e| e.v_air.norm()).unwrap_or(0.0);
        let yield_to = rank_vehicles(&me, &seen, v_air_est).unwrap_or_default();
        let peers: Vec<MovingPoint> = seen
            .iter()
            .filter(|p| yield_to.contains(&p.id))
            .map(|p| MovingPoint { p: p.position, v: p.v_d - fv, clearance: p.r_c.max(self.drift.r_c) })
            .collect();
        let limits = PlannerLimits { a_max: self.a_max, r_c: self.drift.r_c, v_c, r_s: ctx.planner.r_s, dt_s: ctx.dt_s };
        let req = CourseRequest {
            p,
            velocity: local_v,
            heading: self.traj.final_heading(),
            goal: self.goal,
            goal_velocity: -fv,
            clusters: &clusters,
            peers: &peers,
            reaction_time: ctx.planner.reaction_time,
            lookahead: ctx.planner.r_s,
        };
        match plan_course_change(&req, &limits) {
            Ok(plan) => self.apply_course(t, plan.delta_phi, plan.speed),
            Err(TrajError::NoFeasibleCourse) => {
                if self.traj.final_speed() > 0.0 {
                    self.events.push((EventKind::NoFeasibleCourse, String::new()));
                }
                let _ = self.traj.command_speed(0.0, t, self.a_max, 0.0);
            }
            Err(_) => {}
        }
    }

    fn apply_course(&mut self, t: f64, dphi: f64, speed: f64) {
        let a = self.a_max;
        let current = self.traj.final_speed();
        let turn = dphi.abs() > 0.5f64.to_radians();
        let change = (speed - current).abs() > 0.02;
        if turn && change && current > 2.0 * speed.max(1e-3) {
            // slow down first, then turn at the low speed
            let t1 = match self.traj.command_speed(speed, t, a, 0.0) {
                Ok(Some(seg)) => seg.t_end(),
                _ => t,
            };
            let _ = self.traj.command_heading(dphi, t1, speed, a, 0.0);
            return;
        }
        if turn {
            let _ = self.traj.command_heading(dphi, t, current.max(speed), a, 0.0);
        }
        if change {
            let _ = self.traj.command_speed(speed, t, a, 0.0);
        }
    }

    /// Braking into the goal and the small corrective moves after it.
    pub fn goal_logic(&mut self, t: f64) {
        if self.crashed || self.drift.mode == Mode::Drift || !(self.a_max > 0.0) {
            return;
        }
        let a = self.a_max;
        match self.phase {
            Phase::Cruise => {
                let s = self.traj.sample(t);
                let p = planar(&s.p);
                let to_goal = self.goal - p;
                let d = to_goal.norm();
                let v = s.speed;
                if v < 0.05 {
                    if d <= SETTLE_TOL {
                        self.phase = Phase::Holding;
                    }
                    return;
                }
                let tau_min = v * c3() / ((1.0 - EPS_S) * a);
                let d_stop = 0.5 * v * tau_min;
                let misalign = wrap_angle(heading_of(&to_goal) - s.heading).abs();
                let settled = self.traj.end_time() <= t;
                let receding = to_goal.dot(&(planar(&s.v) - self.traj.frame_velocity)) < 0.0;
                if d <= d_stop + v * 0.1 && settled && misalign < BRAKE_ALIGN {
                    let tau = (2.0 * d / v).max(tau_min);
                    let _ = self.traj.command_speed(0.0, t, a, tau);
                    self.phase = Phase::Braking;
                } else if d < 2.0 * d_stop.max(0.5) && receding {
                    let _ = self.traj.command_speed(0.0, t, a, 0.0);
                    self.phase = Phase::Braking;
                }
            }
            Phase::Braking | Phase::Creep => {
                if t >= self.traj.end_time() {
                    self.settle(t);
                }
            }
            Phase::Holding => {}
        }
    }

    fn settle(&mut self, t: f64) {
        self.traj.prune(t);
        let p = planar(&self.traj.sample(t).p);
        let to_goal = self.goal - p;
        let d = to_goal.norm();
        if d <= SETTLE_TOL || self.creeps >= MAX_CREEPS {
            self.phase = Phase::Holding;
            return;
        }
        self.creeps += 1;
        let a = self.a_max;
        let dphi = wrap_angle(heading_of(&to_goal) - self.traj.final_heading());
        let t1 = match self.traj.command_heading(dphi, t, 0.0, a, TURN_IN_PLACE) {
            Ok(Some(seg)) => seg.t_end(),
            _ => t,
        };
        let tau = (1.1 * (d * c3() / ((1.0 - EPS_S) * a)).sqrt()).max(1.0);
        let v = d / tau;
        let _ = self.traj.command_speed(v, t1, a, tau);
        let _ = self.traj.command_speed(0.0, t1 + tau, a, tau);
        self.phase = Phase::Creep;
    }

    /// Position loop: desired force to thrust and attitude.
    pub fn control(&mut self, t: f64, ctx: &Context) {
        if self.crashed {
            return;
        }
        let reference = self.reference(t);
        let f = rise_force(
            &self.state.p,
            &self.state.v,
            &reference,
            &self.gains,
            &mut self.rise,
            self.params.m,
            ctx.env.g,
            ctx.dt_c,
        );
        let att = attitude_from_force(&f, 0.0, self.params.f_max_eff(), self.gains.tilt_limit);
        self.command.f_cmd = att.f_cmd;
        self.command.q_d = att.q_d;
        if att.saturated != self.saturated {
            let kind = if att.saturated { EventKind::SaturationStart } else { EventKind::SaturationEnd };
            self.events.push((kind, format!("f_demand={:.3}", att.f_demand)));
        }
        self.saturated = att.saturated;
    }

    /// Attitude loop and one integration step with the local wind.
    pub fn step_inner(&mut self, wind: &Vec2, ctx: &Context) -> Result<(), DynamicsError> {
        if self.crashed {
            return Ok(());
        }
        let q = EulerAngles::from_body_to_inertial(&self.state.body_to_inertial());
        self.command.u = pid_torque(&self.command.q_d, &q, &self.gains, &mut self.rise, ctx.dt_inner);
        let thrust = saturate_thrust(&self.params, self.command.f_cmd);
        self.force_sum += self.state.body_to_inertial() * Vec3::new(0.0, 0.0, thrust);
        self.force_n += 1;
        self.state = step(
            &self.state,
            &self.params,
            &self.command,
            &lift(wind, 0.0),
            &DisturbanceInputs::default(),
            ctx.dt_inner,
            ctx.env,
        )?;
        if self.state.p.z <= 0.0 {
            self.crashed = true;
            self.state.p.z = 0.0;
            self.state.v = Vec3::zeros();
            self.state.omega = Vec3::zeros();
            self.events.push((EventKind::Crash, String::new()));
        }
        Ok(())
    }
}
