//! Velocity-obstacle controller: the robot solves the same reciprocal
//! avoidance program as the crowd, using agents' current velocities as the
//! short-term motion prediction, then projects onto the drive constraints.

use super::{project_to_diff_drive, ControlView};
use crate::crowd::orca::orca_velocity;
use crate::crowd::rvo::NeighborBody;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RvoCtrlParams {
    /// Anticipation horizon (s).
    pub horizon: f64,
    /// Preferred approach speed toward the goal (m/s).
    pub approach_speed: f64,
    /// Agents beyond this range are ignored (m).
    pub range: f64,
}

impl Default for RvoCtrlParams {
    fn default() -> Self {
        RvoCtrlParams {
            horizon: 1.5,
            approach_speed: 1.0,
            range: 5.0,
        }
    }
}

pub fn rvo_command(view: &ControlView<'_>, params: &RvoCtrlParams) -> (f64, f64) {
    let robot = view.robot;
    let robot_pos = robot.position();
    let mut neighbors: Vec<NeighborBody> = Vec::new();
    for agent in view.agents {
        let rel = agent.position - robot_pos;
        if rel.length() <= params.range {
            neighbors.push(NeighborBody {
                rel_position: rel,
                velocity: agent.velocity,
                combined_radius: agent.radius + robot.radius,
            });
        }
    }
    let v_pref = view.goal.direction * params.approach_speed.min(view.limits.v_max);
    let holonomic = orca_velocity(
        robot.velocity_vec(),
        &neighbors,
        params.horizon,
        view.dt,
        v_pref,
        view.limits.v_max,
    );
    project_to_diff_drive(holonomic, robot, view.limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec2;
    use crate::nav::GoalSpec;
    use crate::world::{AgentState, FlowGroup, RobotLimits, RobotSpec, RobotState, WorldSpec};

    fn agent_at(id: u32, x: f64, y: f64, vx: f64, vy: f64) -> AgentState {
        AgentState {
            id,
            position: Vec2::new(x, y),
            velocity: Vec2::new(vx, vy),
            radius: 0.3,
            preferred_speed: 1.4,
            goal_direction: Vec2::new(-1.0, 0.0),
            flow_group: FlowGroup::MinusX,
        }
    }

    fn command(agents: &[AgentState]) -> (f64, f64) {
        command_moving(agents, 0.0)
    }

    fn command_moving(agents: &[AgentState], v: f64) -> (f64, f64) {
        let mut robot = RobotState::from_spec(&RobotSpec::default());
        robot.v = v;
        let world = WorldSpec::standard();
        let goal = GoalSpec::default();
        let limits = RobotLimits::default();
        let view = ControlView {
            robot: &robot,
            agents,
            world: &world,
            goal: &goal,
            limits: &limits,
            dt: 0.05,
        };
        rvo_command(&view, &RvoCtrlParams::default())
    }

    #[test]
    fn empty_crowd_drives_straight() {
        let (v, w) = command(&[]);
        assert!((v - 1.0).abs() < 1e-12);
        assert!(w.abs() < 1e-9);
    }

    #[test]
    fn static_agent_ahead_forces_a_turn() {
        // Robot driving at full speed with a static agent dead ahead within
        // horizon * v_max: the avoidance needs a lateral component.
        let agents = [agent_at(0, 2.0, 5.0, 0.0, 0.0)];
        let (_, w) = command_moving(&agents, 1.0);
        assert!(w.abs() > 1e-6, "expected lateral avoidance, omega = {w}");
    }

    #[test]
    fn symmetric_pair_keeps_heading_and_slows() {
        let agents = [
            agent_at(0, 2.0, 5.45, 0.0, 0.0),
            agent_at(1, 2.0, 4.55, 0.0, 0.0),
        ];
        let (v, w) = command(&agents);
        assert!(w.abs() < 1e-9, "omega {w}");
        assert!(v < 1.0);
    }
}
