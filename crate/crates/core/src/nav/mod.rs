//! Robot navigation: the three benchmarked controllers.

pub mod baseline;
pub mod dwa;
pub mod rvo_ctrl;

use crate::math::Vec2;
use crate::world::{AgentState, RobotLimits, RobotState, WorldSpec};
use serde::{Deserialize, Serialize};

pub use dwa::DwaParams;
pub use rvo_ctrl::RvoCtrlParams;

/// Proportional heading gain shared by the baseline controller and the
/// holonomic-to-differential projection (1/s).
pub const HEADING_GAIN: f64 = 2.0;

/// Task of the robot: make `target_progress` meters along `direction`
/// within `time_limit` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalSpec {
    pub direction: Vec2,
    pub target_progress: f64,
    pub time_limit: f64,
}

impl Default for GoalSpec {
    fn default() -> Self {
        GoalSpec {
            direction: Vec2::new(1.0, 0.0),
            target_progress: 40.0,
            time_limit: 180.0,
        }
    }
}

/// What a controller is allowed to see when deciding a command.
pub struct ControlView<'a> {
    pub robot: &'a RobotState,
    pub agents: &'a [AgentState],
    pub world: &'a WorldSpec,
    pub goal: &'a GoalSpec,
    pub limits: &'a RobotLimits,
    pub dt: f64,
}

/// Identifier of a controller, as used on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Baseline,
    Dwa,
    Rvo,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] =
        [ControllerKind::Baseline, ControllerKind::Dwa, ControllerKind::Rvo];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Baseline => "baseline",
            ControllerKind::Dwa => "dwa",
            ControllerKind::Rvo => "rvo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "baseline" => Some(ControllerKind::Baseline),
            "dwa" => Some(ControllerKind::Dwa),
            "rvo" => Some(ControllerKind::Rvo),
            _ => None,
        }
    }
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A navigation controller with its parameters. Controllers are pure
/// functions of the view; the only cross-step state is the previous command
/// carried in [`RobotState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Controller {
    Baseline,
    Dwa(#[serde(default)] DwaParams),
    Rvo(#[serde(default)] RvoCtrlParams),
}

impl Controller {
    pub fn from_kind(kind: ControllerKind) -> Self {
        match kind {
            ControllerKind::Baseline => Controller::Baseline,
            ControllerKind::Dwa => Controller::Dwa(DwaParams::default()),
            ControllerKind::Rvo => Controller::Rvo(RvoCtrlParams::default()),
        }
    }

    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::Baseline => ControllerKind::Baseline,
            Controller::Dwa(_) => ControllerKind::Dwa,
            Controller::Rvo(_) => ControllerKind::Rvo,
        }
    }

    /// Emit a (v, omega) command; the caller applies acceleration limits.
    pub fn command(&self, view: &ControlView<'_>) -> (f64, f64) {
        match self {
            Controller::Baseline => baseline::baseline_command(view.robot, view.goal, view.limits),
            Controller::Dwa(params) => dwa::dwa_command(view, params),
            Controller::Rvo(params) => rvo_ctrl::rvo_command(view, params),
        }
    }
}

/// Project a desired holonomic velocity onto (v, omega) for a differential
/// drive: turn toward the desired direction, scale forward speed by how well
/// the heading already matches.
pub fn project_to_diff_drive(desired: Vec2, robot: &RobotState, limits: &RobotLimits) -> (f64, f64) {
    let speed = desired.length();
    if speed < 1e-12 {
        return (0.0, 0.0);
    }
    let angle = crate::math::angle_to(robot.pose.theta, desired);
    let omega = (HEADING_GAIN * angle).clamp(-limits.omega_max, limits.omega_max);
    let v = (speed * angle.cos().max(0.0)).clamp(0.0, limits.v_max);
    (v, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::RobotSpec;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn robot_facing(theta: f64) -> RobotState {
        let mut r = RobotState::from_spec(&RobotSpec::default());
        r.pose.theta = theta;
        r
    }

    #[test]
    fn aligned_projection_passes_through() {
        let limits = RobotLimits::default();
        let (v, w) = project_to_diff_drive(Vec2::new(0.7, 0.0), &robot_facing(0.0), &limits);
        assert!((v - 0.7).abs() < 1e-12);
        assert!(w.abs() < 1e-12);
    }

    #[test]
    fn perpendicular_projection_only_turns() {
        let limits = RobotLimits::default();
        let (v, w) = project_to_diff_drive(Vec2::new(0.0, 1.0), &robot_facing(0.0), &limits);
        assert!(v.abs() < 1e-12);
        assert!((w - HEADING_GAIN * FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_projection_scales_by_cosine() {
        let limits = RobotLimits::default();
        let desired = Vec2::new(SQRT_2 / 2.0, SQRT_2 / 2.0); // 45 deg, magnitude 1
        let (v, w) = project_to_diff_drive(desired, &robot_facing(0.0), &limits);
        assert!((v - SQRT_2 / 2.0).abs() < 1e-12);
        assert!((w - HEADING_GAIN * FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn zero_desired_velocity_stops() {
        let limits = RobotLimits::default();
        assert_eq!(
            project_to_diff_drive(Vec2::ZERO, &robot_facing(1.0), &limits),
            (0.0, 0.0)
        );
    }
}
