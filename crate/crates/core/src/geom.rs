//! Planar vector and angle utilities shared by the planner, estimator and
//! simulator.
//!
//! Planning happens in the horizontal (x, y) plane of the inertial frame
//! (z up). Altitude is handled only by the flight controller.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Rotation2 = nalgebra::Rotation2<f64>;

/// Norm below which a vector is treated as having no direction.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeomError {
    #[error("zero-length vector has no direction")]
    ZeroVector,
}

/// Air density and gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentConstants {
    /// Air density [kg/m^3].
    pub rho: f64,
    /// Magnitude of gravitational acceleration [m/s^2]; the vector points along -z.
    pub g: f64,
}

impl Default for EnvironmentConstants {
    fn default() -> Self {
        Self { rho: 1.225, g: 9.81 }
    }
}

impl EnvironmentConstants {
    pub fn gravity(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.g)
    }
}

/// Signed angle that rotates `a` onto `b`, counterclockwise positive, in (-pi, pi].
pub fn signed_angle(a: &Vec2, b: &Vec2) -> Result<f64, GeomError> {
    if a.norm() <= ZERO_NORM || b.norm() <= ZERO_NORM {
        return Err(GeomError::ZeroVector);
    }
    let cross = a.x * b.y - a.y * b.x;
    let dot = a.dot(b);
    let theta = cross.atan2(dot);
    // atan2 can return -pi for antiparallel inputs; the branch cut belongs to +pi.
    Ok(if theta <= -PI { PI } else { theta })
}

pub fn rotate(v: &Vec2, theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

pub fn unit_from_angle(theta: f64) -> Vec2 {
    let (s, c) = theta.sin_cos();
    Vec2::new(c, s)
}

pub fn heading_of(v: &Vec2) -> f64 {
    v.y.atan2(v.x)
}

/// `sgn` with the zero case resolved to +1 (counterclockwise tie-break).
pub fn sign_ccw(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

pub fn planar(v: &Vec3) -> Vec2 {
    Vec2::new(v.x, v.y)
}

pub fn lift(v: &Vec2, z: f64) -> Vec3 {
    Vec3::new(v.x, v.y, z)
}

/// Distance from `q` to the segment `a`-`b`.
pub fn point_segment_distance(q: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= ZERO_NORM {
        return (q - a).norm();
    }
    let s = ((q - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (q - (a + ab * s)).norm()
}

pub fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Attitude as (roll, pitch, yaw) with pitch positive nose-up.
///
/// Body-to-inertial rotation is `Rz(yaw) * Ry(-pitch) * Rx(roll)` in the
/// z-up inertial frame, so a thrust vector tilted toward +x needs negative
/// pitch (nose down).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn as_vec(&self) -> Vec3 {
        Vec3::new(self.roll, self.pitch, self.yaw)
    }

    /// Body-to-inertial rotation matrix.
    pub fn body_to_inertial(&self) -> Mat3 {
        rot_z(self.yaw) * rot_y(-self.pitch) * rot_x(self.roll)
    }

    /// Recover angles from a body-to-inertial rotation matrix.
    pub fn from_body_to_inertial(r: &Mat3) -> Self {
        // r = Rz(psi) Ry(theta) Rx(phi) with theta = -pitch.
        let theta = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
        let phi = r[(2, 1)].atan2(r[(2, 2)]);
        let psi = r[(1, 0)].atan2(r[(0, 0)]);
        Self { roll: phi, pitch: -theta, yaw: psi }
    }
}

/// Re-orthonormalize a rotation matrix (Gram-Schmidt on columns, det +1).
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let c0 = r.column(0).normalize();
    let c1 = (r.column(1) - c0 * c0.dot(&r.column(1))).normalize();
    let c2 = c0.cross(&c1);
    Mat3::from_columns(&[c0, c1, c2])
}

pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}
