//! Course and speed selection around sensed obstacles and peers.
//!
//! Candidate headings are swept at a fixed resolution around the goal
//! bearing, together with the exact tangent directions of every cluster.
//! A candidate (heading, speed) is feasible when, after a reaction delay
//! spent on the current velocity, straight-line relative motion keeps every
//! sensed point and every peer at least `r_c` away over the look-ahead
//! distance. A point that is already closer than `r_c` must not get any
//! closer. Among feasible candidates the one with the smallest estimated
//! time to goal wins; ties go to the smaller turn, then counterclockwise.

use super::cluster::ObstacleCluster;
use super::projection::{project_cluster, CircDir, ProjectedGeometry};
use super::TrajError;
use crate::geom::{heading_of, unit_from_angle, wrap_angle, Vec2};
use std::f64::consts::PI;

/// Sweep resolution for candidate headings [rad].
pub const SWEEP_STEP: f64 = 0.5 * PI / 180.0;
/// Fractions of `v_c` tried as candidate speeds.
pub const SPEED_LEVELS: [f64; 4] = [1.0, 0.75, 0.5, 0.25];
/// Longest look-ahead in time, however slow the candidate [s].
pub const MAX_HORIZON: f64 = 30.0;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerLimits {
    /// Planar acceleration available to the trajectory [m/s^2].
    pub a_max: f64,
    pub r_c: f64,
    pub v_c: f64,
    /// Sensor range [m].
    pub r_s: f64,
    /// Sensing period [s].
    pub dt_s: f64,
}

/// A point to keep clear of, moving at constant velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingPoint {
    pub p: Vec2,
    pub v: Vec2,
    pub clearance: f64,
}

#[derive(Debug, Clone)]
pub struct CourseRequest<'a> {
    /// Planning position (desired position in the planning frame).
    pub p: Vec2,
    /// Current desired velocity in the planning frame.
    pub velocity: Vec2,
    /// Heading the current plan settles on [rad].
    pub heading: f64,
    pub goal: Vec2,
    pub goal_velocity: Vec2,
    pub clusters: &'a [ObstacleCluster],
    pub peers: &'a [MovingPoint],
    /// Time spent on the current velocity before a new course takes effect [s].
    pub reaction_time: f64,
    /// Distance over which candidates are checked; the sensor range by default.
    pub lookahead: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoursePlan {
    /// Target heading [rad], unwrapped relative to the request heading.
    pub heading: f64,
    pub delta_phi: f64,
    pub speed: f64,
    pub circ_dir: CircDir,
    /// Headings feasible against every obstacle and peer at the chosen speed.
    pub feasible_set: Vec<(f64, f64)>,
    /// Geometry of the most imminent cluster, if any.
    pub geometry: Option<ProjectedGeometry>,
    /// Estimated time to goal of the chosen candidate [s].
    pub cost: f64,
}

impl CoursePlan {
    pub fn contains_heading(&self, heading: f64) -> bool {
        self.feasible_set.iter().any(|&(a, b)| (heading - a).rem_euclid(2.0 * PI) <= b - a + 1e-12)
    }
}

/// Minimum of `|r + w t|` over `t` in `[0, t_max]`.
fn segment_min_distance(r: &Vec2, w: &Vec2, t_max: f64) -> f64 {
    let ww = w.norm_squared();
    let t = if ww > 0.0 { (-r.dot(w) / ww).clamp(0.0, t_max) } else { 0.0 };
    (r + w * t).norm()
}

struct Obstacle {
    rel1: Vec2,
    u: Vec2,
    threshold: f64,
    cluster: Option<usize>,
}

struct Candidate {
    delta: f64,
    cost: f64,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if (a.cost - b.cost).abs() > COST_TOL * (1.0 + b.cost.abs()) {
        return a.cost < b.cost;
    }
    let (da, db) = (a.delta.abs(), b.delta.abs());
    if (da - db).abs() > 1e-12 {
        return da < db;
    }
    a.delta >= 0.0 && b.delta < 0.0
}

pub fn plan_course_change(req: &CourseRequest, limits: &PlannerLimits) -> Result<CoursePlan, TrajError> {
    if !(limits.a_max > 0.0) {
        return Err(TrajError::NoAuthority);
    }
    let t_r = req.reaction_time.max(0.0);
    let to_goal = req.goal - req.p;
    let goal_bearing = if to_goal.norm() > 1e-9 { heading_of(&to_goal) } else { req.heading };

    let mut obstacles = Vec::new();
    let mut push = |p: Vec2, u: Vec2, clearance: f64, cluster: Option<usize>| {
        let rel0 = p - req.p;
        let w0 = u - req.velocity;
        let d1 = segment_min_distance(&rel0, &w0, t_r);
        obstacles.push(Obstacle { rel1: rel0 + w0 * t_r, u, threshold: clearance.min(d1) - 1e-9, cluster });
    };
    for (k, c) in req.clusters.iter().enumerate() {
        for p in &c.points {
            push(*p, c.velocity, limits.r_c, Some(k));
        }
    }
    for peer in req.peers {
        push(peer.p, peer.v, peer.clearance, None);
    }

    // geometry per cluster, and the extra tangent headings it suggests
    let mut geoms = Vec::new();
    let mut headings: Vec<f64> = (-359..=360).map(|j| goal_bearing + j as f64 * SWEEP_STEP).collect();
    for c in req.clusters {
        if let Ok((projections, tangents)) = project_cluster(c, &req.p, &req.velocity, limits.r_c) {
            for s in tangents.as_array() {
                if s.norm() > 1e-9 {
                    headings.push(heading_of(&s));
                }
            }
            geoms.push(Some((projections, tangents)));
        } else {
            geoms.push(None);
        }
    }
    headings.push(req.heading);
    let start = req.p + req.velocity * t_r;
    let look = req.lookahead.max(limits.r_c);

    let feasible_at = |heading: f64, speed: f64, only: Option<usize>| -> bool {
        let vn = unit_from_angle(heading) * speed;
        let t_h = (look / speed).min(MAX_HORIZON);
        obstacles.iter().filter(|o| only.is_none() || o.cluster == only).all(|o| {
            segment_min_distance(&o.rel1, &(o.u - vn), t_h) >= o.threshold
        })
    };
    let cost_of = |heading: f64, speed: f64| -> f64 {
        let dist = (req.goal - start).norm();
        let leg = dist.min(look);
        let t_leg = leg / speed;
        let goal_then = req.goal + req.goal_velocity * (t_r + t_leg);
        let at = start + unit_from_angle(heading) * leg;
        t_r + t_leg + (goal_then - at).norm() / limits.v_c
    };

    let mut best: Option<(Candidate, f64)> = None;
    for level in SPEED_LEVELS {
        let speed = level * limits.v_c;
        if speed <= 0.0 {
            continue;
        }
        for &h in &headings {
            if !feasible_at(h, speed, None) {
                continue;
            }
            let cand = Candidate { delta: wrap_angle(h - req.heading), cost: cost_of(h, speed) };
            if best.as_ref().is_none_or(|(b, _)| better(&cand, b)) {
                best = Some((cand, speed));
            }
        }
    }
    let (choice, speed) = best.ok_or(TrajError::NoFeasibleCourse)?;

    let intervals = |only: Option<usize>| -> Vec<(f64, f64)> {
        let mut sweep: Vec<f64> = headings.clone();
        sweep.sort_by(|a, b| wrap_angle(a - goal_bearing).total_cmp(&wrap_angle(b - goal_bearing)));
        sweep.dedup_by(|a, b| (wrap_angle(*a - *b)).abs() < 1e-12);
        let flags: Vec<bool> = sweep.iter().map(|&h| feasible_at(h, speed, only)).collect();
        if flags.iter().all(|&f| f) {
            return vec![(goal_bearing - PI, goal_bearing + PI)];
        }
        let mut out = Vec::new();
        let mut run: Option<(f64, f64)> = None;
        for (h, f) in sweep.iter().zip(flags) {
            let a = goal_bearing + wrap_angle(h - goal_bearing);
            match (f, run.as_mut()) {
                (true, Some(r)) => r.1 = a,
                (true, None) => run = Some((a, a)),
                (false, Some(_)) => out.push(run.take().unwrap()),
                (false, None) => {}
            }
        }
        out.extend(run);
        out
    };

    // most imminent cluster along the current velocity
    let imminent = (0..req.clusters.len())
        .filter(|&k| geoms[k].is_some())
        .map(|k| {
            let c = &req.clusters[k];
            let w = c.velocity - req.velocity;
            let t = c
                .points
                .iter()
                .map(|p| time_to_violation(&(p - req.p), &w, limits.r_c))
                .fold(f64::INFINITY, f64::min);
            (k, t)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let circ_dir = if choice.delta >= 0.0 { CircDir::Ccw } else { CircDir::Cw };
    let geometry = imminent.map(|(k, _)| {
        let (projections, tangents) = geoms[k].clone().expect("filtered");
        ProjectedGeometry {
            cluster_id: req.clusters[k].id,
            projections,
            tangents,
            feasible_set: intervals(Some(k)),
            circ_dir,
            delta_phi: choice.delta,
        }
    });

    Ok(CoursePlan {
        heading: req.heading + choice.delta,
        delta_phi: choice.delta,
        speed,
        circ_dir,
        feasible_set: intervals(None),
        geometry,
        cost: choice.cost,
    })
}

/// Earliest time at which a point at relative position `r` moving with
/// relative velocity `w` comes within `r_c`; zero if already inside.
pub fn time_to_violation(r: &Vec2, w: &Vec2, r_c: f64) -> f64 {
    if r.norm() <= r_c {
        return 0.0;
    }
    let a = w.norm_squared();
    let b = 2.0 * r.dot(w);
    let c = r.norm_squared() - r_c * r_c;
    let disc = b * b - 4.0 * a * c;
    if a == 0.0 || disc < 0.0 || b >= 0.0 {
        return f64::INFINITY;
    }
    (-b - disc.sqrt()) / (2.0 * a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajgen::cluster::ObstacleCluster;
    use approx::assert_abs_diff_eq;

    fn limits() -> PlannerLimits {
        PlannerLimits { a_max: 2.0, r_c: 1.0, v_c: 1.5, r_s: 12.5, dt_s: 1.0 }
    }

    fn request<'a>(clusters: &'a [ObstacleCluster], goal: Vec2) -> CourseRequest<'a> {
        CourseRequest {
            p: Vec2::zeros(),
            velocity: Vec2::new(1.5, 0.0),
            heading: 0.0,
            goal,
            goal_velocity: Vec2::zeros(),
            clusters,
            peers: &[],
            reaction_time: 0.0,
            lookahead: 12.5,
        }
    }

    fn disc(center: Vec2, radius: f64, p_d: &Vec2) -> ObstacleCluster {
        // only the half facing the origin, as a scan would see it
        let pts: Vec<Vec2> = (0..=36)
            .map(|i| {
                let a = PI / 2.0 + i as f64 * PI / 36.0;
                center + unit_from_angle(a) * radius
            })
            .collect();
        ObstacleCluster::new(1, pts, Vec2::zeros(), p_d)
    }

    #[test]
    fn free_space_heads_for_goal() {
        let plan = plan_course_change(&request(&[], Vec2::new(3.0, 4.0)), &limits()).unwrap();
        assert_abs_diff_eq!(plan.heading, 4f64.atan2(3.0), epsilon = 1e-12);
        assert_eq!(plan.speed, 1.5);
        assert_eq!(plan.feasible_set.len(), 1);
        let (a, b) = plan.feasible_set[0];
        assert_abs_diff_eq!(b - a, 2.0 * PI, epsilon = 1e-12);
        assert!(plan.geometry.is_none());
    }

    #[test]
    fn symmetric_head_on_obstacle_breaks_tie_counterclockwise() {
        let p_d = Vec2::zeros();
        let c = [disc(Vec2::new(8.0, 0.0), 2.0, &p_d)];
        let mut req = request(&c, Vec2::new(20.0, 0.0));
        req.velocity = Vec2::zeros();
        let plan = plan_course_change(&req, &limits()).unwrap();
        assert!(plan.delta_phi > 0.0);
        assert_eq!(plan.circ_dir, CircDir::Ccw);
        // the mirrored heading is feasible too
        assert!(plan.contains_heading(-plan.heading));
        assert!(plan.contains_heading(plan.heading));
        assert!(!plan.contains_heading(0.0));
        let g = plan.geometry.unwrap();
        assert!(g.feasible_set.len() >= 2);
    }

    #[test]
    fn chosen_heading_clears_every_point() {
        let p_d = Vec2::zeros();
        let c = [disc(Vec2::new(6.0, 1.0), 2.5, &p_d)];
        let plan = plan_course_change(&request(&c, Vec2::new(20.0, 0.0)), &limits()).unwrap();
        let dir = unit_from_angle(plan.heading);
        for p in &c[0].points {
            let along = p.dot(&dir).max(0.0);
            assert!((p - dir * along).norm() >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn blocked_everywhere_reports_no_course() {
        let p_d = Vec2::zeros();
        let ring: Vec<Vec2> = (0..360).map(|d| unit_from_angle((d as f64).to_radians()) * 3.0).collect();
        let c = [ObstacleCluster::new(1, ring, Vec2::zeros(), &p_d)];
        assert_eq!(plan_course_change(&request(&c, Vec2::new(20.0, 0.0)), &limits()), Err(TrajError::NoFeasibleCourse));
    }

    #[test]
    fn slower_speed_lets_a_crossing_peer_pass() {
        // a peer crossing ahead from the right at our speed
        let peers = [MovingPoint { p: Vec2::new(4.0, -4.0), v: Vec2::new(0.0, 1.5), clearance: 1.0 }];
        let mut req = request(&[], Vec2::new(30.0, 0.0));
        req.peers = &peers;
        let plan = plan_course_change(&req, &limits()).unwrap();
        let vn = unit_from_angle(plan.heading) * plan.speed;
        let rel = peers[0].p;
        let w = peers[0].v - vn;
        assert!(segment_min_distance(&rel, &w, 100.0) >= 1.0 - 1e-9);
    }

    #[test]
    fn inside_clearance_must_open_distance() {
        let p_d = Vec2::zeros();
        // a wall 0.6 m to the left, parallel to the course
        let wall: Vec<Vec2> = (-20..=20).map(|i| Vec2::new(i as f64 * 0.25, 0.6)).collect();
        let c = [ObstacleCluster::new(1, wall, Vec2::zeros(), &p_d)];
        let plan = plan_course_change(&request(&c, Vec2::new(20.0, 0.0)), &limits()).unwrap();
        assert!(plan.heading <= 0.0);
    }

    #[test]
    fn time_to_violation_cases() {
        assert_eq!(time_to_violation(&Vec2::new(0.5, 0.0), &Vec2::zeros(), 1.0), 0.0);
        assert_abs_diff_eq!(time_to_violation(&Vec2::new(5.0, 0.0), &Vec2::new(-1.0, 0.0), 1.0), 4.0, epsilon = 1e-12);
        assert_eq!(time_to_violation(&Vec2::new(5.0, 0.0), &Vec2::new(1.0, 0.0), 1.0), f64::INFINITY);
    }
}
