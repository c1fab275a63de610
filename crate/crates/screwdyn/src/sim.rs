//! Batch simulation front-end: scenario configs, fixed-step integration,
//! conservation monitoring and trajectory output.

pub mod integrate;
pub mod output;
pub mod scenario;

pub use integrate::{integrate, SimOutput, Summary, TrajectoryRecord};
pub use scenario::{Scenario, ScenarioFile, SimError};
