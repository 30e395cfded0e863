//! Clearance-aware projection of sensed points and the tangent directions
//! used to steer around an obstacle.
//!
//! A sensed point `p_i` is replaced by the point `p*` where a line from the
//! desired position `p_d` touches the circle of radius `r_c` around `p_i`.
//! When `p_d` is already inside that circle the point is instead pushed to
//! the circle boundary on the far side, rotated by one degree toward the
//! direction of travel, so that the resulting course opens the distance.

use super::cluster::ObstacleCluster;
use super::TrajError;
use crate::geom::{rotate, sign_ccw, signed_angle, Vec2};
use std::f64::consts::PI;

/// Distance below which a sensed point is considered coincident with `p_d`.
pub const COINCIDENT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Angle from the closest-point direction to `p* - p_d`.
    pub phi_e: f64,
    pub p_star: Vec2,
    /// `p_d` was within `r_c` of the sensed point.
    pub inside: bool,
}

fn angle_or_zero(a: &Vec2, b: &Vec2) -> f64 {
    signed_angle(a, b).unwrap_or(0.0)
}

/// Project `p_i` (a point of a cluster whose closest point is `p_min`).
pub fn project_point(p_d: &Vec2, v_d: &Vec2, p_i: &Vec2, p_min: &Vec2, r_c: f64) -> Result<Projection, TrajError> {
    let r_i = p_i - p_d;
    let r_min = p_min - p_d;
    let dist = r_i.norm();
    if dist < COINCIDENT || r_min.norm() < COINCIDENT {
        return Err(TrajError::CoincidentPoint);
    }
    let r_min_hat = r_min / r_min.norm();
    if dist > r_c {
        let phi_e1 = angle_or_zero(&r_min, &r_i);
        let k = if phi_e1.abs() > 0.0 { sign_ccw(phi_e1) } else { sign_ccw(angle_or_zero(&r_min, v_d)) };
        let phi_e = phi_e1 + k * (r_c / dist).asin();
        let reach = (dist * dist - r_c * r_c).sqrt();
        Ok(Projection { phi_e, p_star: p_d + rotate(&r_min_hat, phi_e) * reach, inside: false })
    } else {
        let phi_pm1 = PI / 180.0 * sign_ccw(angle_or_zero(v_d, &r_min));
        let p_star = p_i + rotate(&(-r_i / dist), phi_pm1) * r_c;
        let phi_e = angle_or_zero(&r_min, &(p_star - p_d));
        Ok(Projection { phi_e, p_star, inside: true })
    }
}

/// Candidate traverse directions around a cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangents {
    pub s1: Vec2,
    pub s2: Vec2,
    pub s3: Vec2,
    pub s4: Vec2,
}

impl Tangents {
    pub fn as_array(&self) -> [Vec2; 4] {
        [self.s1, self.s2, self.s3, self.s4]
    }
}

/// Tangent directions from the projected extent points. When the closest
/// point violates `r_c`, `s1` and `s3` are anchored at the vehicle so that
/// following them clears the violation.
pub fn tangent_candidates(
    p_d: &Vec2,
    p_min: &Vec2,
    star_e1: &Vec2,
    star_e2: &Vec2,
    star_min: &Vec2,
    r_c: f64,
) -> Tangents {
    let violated = (p_min - p_d).norm() < r_c;
    let base = if violated { *p_d } else { *star_min };
    Tangents { s1: star_e1 - base, s2: star_e1 - p_d, s3: star_e2 - base, s4: star_e2 - p_d }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircDir {
    Cw,
    Ccw,
}

/// Projection of one cluster plus the course decision made around it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedGeometry {
    pub cluster_id: u32,
    pub projections: Vec<Projection>,
    pub tangents: Tangents,
    /// Feasible course-change angles for this cluster, as closed intervals
    /// of absolute heading [rad].
    pub feasible_set: Vec<(f64, f64)>,
    pub circ_dir: CircDir,
    pub delta_phi: f64,
}

/// Project every point of `cluster` and derive its tangent directions.
pub fn project_cluster(cluster: &ObstacleCluster, p_d: &Vec2, v_d: &Vec2, r_c: f64) -> Result<(Vec<Projection>, Tangents), TrajError> {
    let p_min = cluster.points[cluster.min_idx];
    let projections = cluster
        .points
        .iter()
        .map(|p| project_point(p_d, v_d, p, &p_min, r_c))
        .collect::<Result<Vec<_>, _>>()?;
    let tangents = tangent_candidates(
        p_d,
        &p_min,
        &projections[cluster.e1].p_star,
        &projections[cluster.e2].p_star,
        &projections[cluster.min_idx].p_star,
        r_c,
    );
    Ok((projections, tangents))
}
