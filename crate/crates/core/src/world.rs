//! World geometry and the entity state types shared by every subsystem.

use crate::math::Vec2;
use serde::{Deserialize, Serialize};

/// Rectangular corridor, walls at x in {0, length} and y in {0, width}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub length: f64,
    pub width: f64,
}

impl WorldSpec {
    /// The 50 m x 10 m corridor used by the standard suite.
    pub fn standard() -> Self {
        WorldSpec {
            length: 50.0,
            width: 10.0,
        }
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.length && p.y >= 0.0 && p.y <= self.width
    }

    /// Wall segments, counter-clockwise from the bottom wall.
    pub fn wall_segments(&self) -> [(Vec2, Vec2); 4] {
        let l = self.length;
        let w = self.width;
        [
            (Vec2::new(0.0, 0.0), Vec2::new(l, 0.0)),
            (Vec2::new(l, 0.0), Vec2::new(l, w)),
            (Vec2::new(l, w), Vec2::new(0.0, w)),
            (Vec2::new(0.0, w), Vec2::new(0.0, 0.0)),
        ]
    }

    /// Distance to each wall plane with its inward normal:
    /// (bottom, top, left, right).
    pub fn wall_distances(&self, p: Vec2) -> [(f64, Vec2); 4] {
        [
            (p.y, Vec2::new(0.0, 1.0)),
            (self.width - p.y, Vec2::new(0.0, -1.0)),
            (p.x, Vec2::new(1.0, 0.0)),
            (self.length - p.x, Vec2::new(-1.0, 0.0)),
        ]
    }
}

/// Which axis an agent's flow runs along; the agent wraps on this axis only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowGroup {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl FlowGroup {
    pub fn goal_direction(self) -> Vec2 {
        match self {
            FlowGroup::PlusX => Vec2::new(1.0, 0.0),
            FlowGroup::MinusX => Vec2::new(-1.0, 0.0),
            FlowGroup::PlusY => Vec2::new(0.0, 1.0),
            FlowGroup::MinusY => Vec2::new(0.0, -1.0),
        }
    }

    pub fn along_x(self) -> bool {
        matches!(self, FlowGroup::PlusX | FlowGroup::MinusX)
    }
}

/// One crowd member. Agents are discs moving holonomically.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
    pub preferred_speed: f64,
    pub goal_direction: Vec2,
    pub flow_group: FlowGroup,
}

impl AgentState {
    /// Hard cap on agent speed relative to its preferred speed.
    pub const SPEED_CAP_FACTOR: f64 = 1.3;

    pub fn preferred_velocity(&self) -> Vec2 {
        self.goal_direction * self.preferred_speed
    }

    pub fn max_speed(&self) -> f64 {
        self.preferred_speed * Self::SPEED_CAP_FACTOR
    }
}

/// Robot pose on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::new(self.theta.cos(), self.theta.sin())
    }
}

/// Velocity and acceleration limits of the robot base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub omega_max: f64,
    pub alpha_max: f64,
}

impl Default for RobotLimits {
    fn default() -> Self {
        RobotLimits {
            v_max: 1.0,
            a_max: 5.0,
            omega_max: std::f64::consts::TAU,
            alpha_max: std::f64::consts::TAU,
        }
    }
}

/// Physical robot description used for contacts and impact energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotSpec {
    pub radius: f64,
    pub mass: f64,
    /// Highest point of the robot body above the floor; decides which body
    /// segment of a pedestrian it strikes.
    pub top_height: f64,
    pub start: Pose,
}

impl Default for RobotSpec {
    fn default() -> Self {
        RobotSpec {
            radius: 0.18,
            mass: 20.0,
            top_height: 0.42,
            start: Pose::new(1.0, 5.0, 0.0),
        }
    }
}

/// Differential-drive robot state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub pose: Pose,
    pub v: f64,
    pub omega: f64,
    pub radius: f64,
    pub mass: f64,
    pub top_height: f64,
}

impl RobotState {
    pub fn from_spec(spec: &RobotSpec) -> Self {
        RobotState {
            pose: spec.start,
            v: 0.0,
            omega: 0.0,
            radius: spec.radius,
            mass: spec.mass,
            top_height: spec.top_height,
        }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position()
    }

    /// World-frame velocity vector of the base.
    pub fn velocity_vec(&self) -> Vec2 {
        self.pose.heading() * self.v
    }
}

/// Simulation clock; dt is fixed over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub t: f64,
    pub dt: f64,
    pub step_index: u64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        SimClock {
            t: 0.0,
            dt,
            step_index: 0,
        }
    }

    pub fn advance(&mut self) {
        self.step_index += 1;
        self.t = self.step_index as f64 * self.dt;
    }
}

/// One robot-agent contact as detected this step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub agent_id: u32,
    pub depth: f64,
    /// Unit normal pointing from the agent toward the robot.
    pub normal: Vec2,
    /// Closing speed along the line of centers at detection, >= 0.
    pub v_rel: f64,
    /// True when this pair was contact-free in the previous step.
    pub onset: bool,
}

pub type ContactSet = Vec<Contact>;
