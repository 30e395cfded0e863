//! Grouping of range/bearing returns into obstacles.

use crate::geom::{signed_angle, unit_from_angle, wrap_angle, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanReturn {
    pub bearing: f64,
    pub range: f64,
    /// Velocity of the surface hit, when the sensor reports it.
    pub velocity: Option<Vec2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    /// Range jump that separates two obstacles [m].
    pub delta_range: f64,
    /// Bearing gap that separates two obstacles [rad].
    pub delta_bearing: f64,
    /// Largest centroid shift still matched to the same obstacle across scans [m].
    pub match_radius: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self { delta_range: 1.0, delta_bearing: 5f64.to_radians(), match_radius: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleCluster {
    pub id: u32,
    /// Inertial positions of the returns, ordered by bearing.
    pub points: Vec<Vec2>,
    pub velocity: Vec2,
    pub centroid: Vec2,
    /// Most clockwise point as seen from `p_d`, relative to the closest point.
    pub e1: usize,
    /// Most counterclockwise point.
    pub e2: usize,
    /// Point closest to `p_d`.
    pub min_idx: usize,
}

impl ObstacleCluster {
    pub fn new(id: u32, points: Vec<Vec2>, velocity: Vec2, p_d: &Vec2) -> Self {
        assert!(!points.is_empty(), "cluster needs at least one point");
        let centroid = points.iter().fold(Vec2::zeros(), |a, p| a + p) / points.len() as f64;
        let mut c = Self { id, points, velocity, centroid, e1: 0, e2: 0, min_idx: 0 };
        c.update_extents(p_d);
        c
    }

    /// Recompute closest and extent points for a new reference position.
    pub fn update_extents(&mut self, p_d: &Vec2) {
        let d = |p: &Vec2| (p - p_d).norm();
        self.min_idx = (0..self.points.len())
            .min_by(|&a, &b| d(&self.points[a]).total_cmp(&d(&self.points[b])))
            .unwrap_or(0);
        let r_min = self.points[self.min_idx] - p_d;
        let ang: Vec<f64> = self.points.iter().map(|p| signed_angle(&r_min, &(p - p_d)).unwrap_or(0.0)).collect();
        self.e1 = (0..ang.len()).min_by(|&a, &b| ang[a].total_cmp(&ang[b])).unwrap_or(0);
        self.e2 = (0..ang.len()).max_by(|&a, &b| ang[a].total_cmp(&ang[b])).unwrap_or(0);
    }

    /// Same obstacle seen in a frame moving with velocity `frame_velocity`.
    pub fn in_frame(&self, frame_velocity: &Vec2) -> Self {
        Self { velocity: self.velocity - frame_velocity, ..self.clone() }
    }
}

/// Split a bearing-sorted scan into contiguous groups (indices into `scan`).
pub fn split_scan(scan: &[ScanReturn], params: &ClusterParams) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, r) in scan.iter().enumerate() {
        let joins = i > 0 && {
            let prev = &scan[i - 1];
            (r.range - prev.range).abs() <= params.delta_range
                && wrap_angle(r.bearing - prev.bearing).abs() <= params.delta_bearing
        };
        if joins {
            groups.last_mut().expect("group exists").push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    // the scan wraps around at +-pi
    if groups.len() > 1 {
        let first = &scan[groups[0][0]];
        let last = &scan[*groups.last().unwrap().last().unwrap()];
        let gap = wrap_angle(first.bearing - last.bearing).abs();
        if (first.range - last.range).abs() <= params.delta_range && gap <= params.delta_bearing && gap < PI {
            let head = groups.remove(0);
            groups.last_mut().unwrap().extend(head);
        }
    }
    groups
}

/// One-shot clustering of a scan taken at `origin`; ids are assigned in
/// scan order and velocities come from the returns when available.
pub fn cluster_obstacles(origin: &Vec2, scan: &[ScanReturn], p_d: &Vec2, params: &ClusterParams) -> Vec<ObstacleCluster> {
    split_scan(scan, params)
        .into_iter()
        .enumerate()
        .map(|(k, g)| build(k as u32, origin, scan, &g, p_d, None))
        .collect()
}

fn build(id: u32, origin: &Vec2, scan: &[ScanReturn], idx: &[usize], p_d: &Vec2, fallback_velocity: Option<Vec2>) -> ObstacleCluster {
    let points: Vec<Vec2> = idx.iter().map(|&i| origin + unit_from_angle(scan[i].bearing) * scan[i].range).collect();
    let sensed: Option<Vec<Vec2>> = idx.iter().map(|&i| scan[i].velocity).collect();
    let velocity = match sensed {
        Some(vs) if !vs.is_empty() => vs.iter().fold(Vec2::zeros(), |a, v| a + v) / vs.len() as f64,
        _ => fallback_velocity.unwrap_or_else(Vec2::zeros),
    };
    ObstacleCluster::new(id, points, velocity, p_d)
}

/// Keeps obstacle ids stable across scans by nearest-centroid matching and
/// estimates velocity from centroid displacement when the sensor does not
/// report it.
#[derive(Debug, Clone, Default)]
pub struct ClusterTracker {
    pub params: ClusterParams,
    tracks: Vec<(u32, Vec2)>,
    next_id: u32,
}

impl ClusterTracker {
    pub fn new(params: ClusterParams) -> Self {
        Self { params, tracks: Vec::new(), next_id: 0 }
    }

    pub fn update(&mut self, origin: &Vec2, scan: &[ScanReturn], p_d: &Vec2, dt_s: f64) -> Vec<ObstacleCluster> {
        let groups = split_scan(scan, &self.params);
        let mut used = vec![false; self.tracks.len()];
        let mut out = Vec::with_capacity(groups.len());
        let mut tracks = Vec::with_capacity(groups.len());
        for g in groups {
            let provisional = build(0, origin, scan, &g, p_d, None);
            let c = provisional.centroid;
            let best = self
                .tracks
                .iter()
                .enumerate()
                .filter(|(k, (_, prev))| !used[*k] && (prev - c).norm() <= self.params.match_radius)
                .min_by(|a, b| (a.1 .1 - c).norm().total_cmp(&(b.1 .1 - c).norm()));
            let (id, displaced) = match best {
                Some((k, (id, prev))) => {
                    used[k] = true;
                    (*id, Some((c - prev) / dt_s))
                }
                None => {
                    self.next_id += 1;
                    (self.next_id, None)
                }
            };
            let cluster = build(id, origin, scan, &g, p_d, displaced);
            tracks.push((id, c));
            out.push(cluster);
        }
        self.tracks = tracks;
        out
    }
}
