//! Deterministic 2D corridor benchmark for robot navigation in crowds.
//!
//! A differential-drive robot crosses a 50 m x 10 m corridor against
//! configurable crowd flows while three controllers (straight baseline,
//! dynamic-window, reciprocal velocity obstacles) are scored on path
//! efficiency, crowd disturbance, proximity, contact time, and the kinetic
//! energy its collisions would absorb. Identical inputs reproduce identical
//! outputs byte for byte, regardless of parallelism.

pub mod crowd;
pub mod error;
pub mod math;
pub mod metrics;
pub mod nav;
pub mod record;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod sensors;
pub mod sim;
pub mod world;

pub use error::SimError;
pub use math::Vec2;
pub use nav::{Controller, ControllerKind, GoalSpec};
pub use record::StepRecord;
pub use scenario::{DensityLevel, FlowKind, RunStatus, ScenarioSpec, SuiteSpec};
pub use sim::{SimParams, Simulation};
pub use world::{AgentState, Pose, RobotLimits, RobotSpec, RobotState, WorldSpec};
