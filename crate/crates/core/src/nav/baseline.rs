//! Straight-to-goal controller that ignores the crowd entirely.

use super::{GoalSpec, HEADING_GAIN};
use crate::math::angle_to;
use crate::world::{RobotLimits, RobotState};

/// Turn toward the goal axis and drive at full speed scaled by heading
/// alignment. Obstacles are ignored by design.
pub fn baseline_command(robot: &RobotState, goal: &GoalSpec, limits: &RobotLimits) -> (f64, f64) {
    let heading_error = angle_to(robot.pose.theta, goal.direction);
    let omega = (HEADING_GAIN * heading_error).clamp(-limits.omega_max, limits.omega_max);
    let v = limits.v_max * heading_error.cos().max(0.0);
    (v, omega)
}
