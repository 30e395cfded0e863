//! Deterministic multi-vehicle simulation: scenario files, the tick loop,
//! safety monitoring and run logs.

pub mod agent;
pub mod log;
pub mod run;
pub mod safety;
pub mod scenario;
pub mod world;

pub use log::{goal_progress, Event, EventKind, GoalProgress, LogRow, RunLog, RunSummary, VehicleSummary, CSV_HEADER};
pub use run::{run, scan, RunOutput};
pub use safety::{check_safety, SafetyEvent, SafetyKind, SafetyReport};
pub use scenario::{PlannerConfig, Scenario, SimConfig, VehicleSpec};
pub use world::{Gate, ObstacleSpec};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
}
