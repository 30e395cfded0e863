//! Clearance monitoring between vehicles, obstacles and each other.

use super::world::ObstacleSpec;
use crate::geom::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SafetyKind {
    Collision,
    RcViolation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetyEvent {
    pub kind: SafetyKind,
    /// Index of the vehicle in the input slices.
    pub vehicle: usize,
    pub other: Other,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Other {
    Obstacle(usize),
    Vehicle(usize),
}

/// Per-vehicle nearest distances plus the clearance events of this instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyReport {
    pub min_obstacle: Vec<f64>,
    pub min_peer: Vec<f64>,
    pub events: Vec<SafetyEvent>,
}

/// Collision when a distance drops below the vehicle core (`r_cv`, summed
/// for vehicle pairs), an r_c violation when it only drops below `r_c`.
/// Pair events are reported once, on the lower index.
pub fn check_safety(positions: &[Vec2], obstacles: &[ObstacleSpec], r_cv: &[f64], r_c: &[f64], t: f64) -> SafetyReport {
    let n = positions.len();
    let mut rep = SafetyReport { min_obstacle: vec![f64::INFINITY; n], min_peer: vec![f64::INFINITY; n], events: Vec::new() };
    for i in 0..n {
        for (k, o) in obstacles.iter().enumerate() {
            let d = o.distance(&positions[i], t);
            rep.min_obstacle[i] = rep.min_obstacle[i].min(d);
            let kind = if d < r_cv[i] {
                Some(SafetyKind::Collision)
            } else if d < r_c[i] {
                Some(SafetyKind::RcViolation)
            } else {
                None
            };
            if let Some(kind) = kind {
                rep.events.push(SafetyEvent { kind, vehicle: i, other: Other::Obstacle(k), distance: d });
            }
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = (positions[i] - positions[j]).norm();
            rep.min_peer[i] = rep.min_peer[i].min(d);
            if j < i {
                continue;
            }
            let kind = if d < r_cv[i] + r_cv[j] {
                Some(SafetyKind::Collision)
            } else if d < r_c[i].max(r_c[j]) {
                Some(SafetyKind::RcViolation)
            } else {
                None
            };
            if let Some(kind) = kind {
                rep.events.push(SafetyEvent { kind, vehicle: i, other: Other::Vehicle(j), distance: d });
            }
        }
    }
    rep
}
