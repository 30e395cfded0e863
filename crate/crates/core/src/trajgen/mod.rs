//! Reactive trajectory generation: maneuver ranking, obstacle clustering,
//! clearance-aware projection geometry, course selection and sigmoid
//! transitions.

pub mod cluster;
pub mod course;
pub mod projection;
pub mod ranking;
pub mod sigmoid;
pub mod trajectory;

pub use cluster::{cluster_obstacles, ClusterParams, ClusterTracker, ObstacleCluster, ScanReturn};
pub use course::{plan_course_change, CoursePlan, CourseRequest, MovingPoint, PlannerLimits};
pub use projection::{project_point, tangent_candidates, ProjectedGeometry, Projection, Tangents};
pub use ranking::{effective_cruise_speed, rank_vehicles, PeerReport};
pub use sigmoid::{fit_sigmoid, SegmentKind, SigmoidSegment};
pub use trajectory::{append_transition, Trajectory, TrajectorySample};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajError {
    #[error("transition timespan {tau_f} s is shorter than the minimum {tau_f_min} s")]
    TooShort { tau_f: f64, tau_f_min: f64 },
    #[error("sensed point coincides with the desired position")]
    CoincidentPoint,
    #[error("duplicate vehicle id {0}")]
    DuplicateId(u32),
    #[error("no feasible course change")]
    NoFeasibleCourse,
    #[error("no planar control authority (a_max <= 0)")]
    NoAuthority,
}
