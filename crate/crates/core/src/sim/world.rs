//! Obstacle geometry: ray casting for the range sensor and clearance queries.

use crate::geom::{point_segment_distance, Vec2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleSpec {
    Disc {
        center: Vec2,
        radius: f64,
        #[serde(default = "Vec2::zeros")]
        velocity: Vec2,
    },
    /// Simple polygon, vertices in order.
    Polygon {
        vertices: Vec<Vec2>,
        #[serde(default = "Vec2::zeros")]
        velocity: Vec2,
    },
}

impl ObstacleSpec {
    pub fn velocity(&self) -> Vec2 {
        match self {
            Self::Disc { velocity, .. } | Self::Polygon { velocity, .. } => *velocity,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::Disc { radius, .. } if !(*radius > 0.0) => Err("disc radius must be > 0".into()),
            Self::Polygon { vertices, .. } if vertices.len() < 3 => Err("polygon needs at least 3 vertices".into()),
            _ => Ok(()),
        }
    }

    /// Distance from `p` to the obstacle surface at time `t`; negative inside.
    pub fn distance(&self, p: &Vec2, t: f64) -> f64 {
        let shift = self.velocity() * t;
        match self {
            Self::Disc { center, radius, .. } => (p - (center + shift)).norm() - radius,
            Self::Polygon { vertices, .. } => {
                let q = p - shift;
                let n = vertices.len();
                let d = (0..n)
                    .map(|i| point_segment_distance(&q, &vertices[i], &vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min);
                if point_in_polygon(&q, vertices) {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Nearest hit along `origin + s dir`, `s` in `(0, max_range]`.
    pub fn ray_hit(&self, origin: &Vec2, dir: &Vec2, max_range: f64, t: f64) -> Option<f64> {
        let shift = self.velocity() * t;
        let o = origin - shift;
        let hit = match self {
            Self::Disc { center, radius, .. } => ray_circle(&o, dir, center, *radius),
            Self::Polygon { vertices, .. } => {
                let n = vertices.len();
                (0..n)
                    .filter_map(|i| ray_segment(&o, dir, &vertices[i], &vertices[(i + 1) % n]))
                    .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))))
            }
        };
        hit.filter(|&s| s <= max_range)
    }
}

fn point_in_polygon(p: &Vec2, vs: &[Vec2]) -> bool {
    let mut inside = false;
    let n = vs.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (vs[i], vs[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn ray_circle(o: &Vec2, dir: &Vec2, c: &Vec2, r: f64) -> Option<f64> {
    let m = o - c;
    let b = m.dot(dir);
    let cc = m.norm_squared() - r * r;
    if cc <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - cc;
    if disc < 0.0 || b > 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}

fn ray_segment(o: &Vec2, dir: &Vec2, a: &Vec2, b: &Vec2) -> Option<f64> {
    let e = b - a;
    let denom = dir.x * e.y - dir.y * e.x;
    if denom.abs() < 1e-14 {
        return None;
    }
    let w = a - o;
    let s = (w.x * e.y - w.y * e.x) / denom;
    let u = (w.x * dir.y - w.y * dir.x) / denom;
    (s > 0.0 && (0.0..=1.0).contains(&u)).then_some(s)
}

/// Axis-aligned rectangle used to check passages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub name: String,
    pub min: Vec2,
    pub max: Vec2,
}

impl Gate {
    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}
