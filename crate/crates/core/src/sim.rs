//! The synchronous simulation step: sense, decide, integrate, collide, wrap.

use crate::crowd::grid::NeighborGrid;
use crate::crowd::{update_agent_velocity, CrowdModelConfig, CrowdScratch, CrowdView, RobotDisc};
use crate::error::SimError;
use crate::math::{wrap_angle, Vec2};
use crate::nav::{Controller, ControlView, GoalSpec};
use crate::record::StepRecord;
use crate::sensors::{lidar_scan, LidarSpec};
use crate::world::{
    AgentState, Contact, ContactSet, FlowGroup, RobotLimits, RobotSpec, RobotState, SimClock,
    WorldSpec,
};
use rand_chacha::ChaCha8Rng;

/// Switch to straight-line integration below this |omega|.
pub const EPS_OMEGA: f64 = 1e-6;

/// Default effective mass of a crowd agent in contact resolution (kg).
pub const AGENT_CONTACT_MASS: f64 = 70.0;

/// Relaxation iterations of the position-based overlap solver.
pub const RESOLVE_ITERATIONS: usize = 8;

/// Exact arc integration of a differential-drive pose.
pub fn integrate_diff_drive(pose: (f64, f64, f64), v: f64, omega: f64, dt: f64) -> (f64, f64, f64) {
    let (x, y, theta) = pose;
    if omega.abs() < EPS_OMEGA {
        (
            x + v * theta.cos() * dt,
            y + v * theta.sin() * dt,
            wrap_angle(theta + omega * dt),
        )
    } else {
        let r = v / omega;
        let theta_next = theta + omega * dt;
        (
            x + r * (theta_next.sin() - theta.sin()),
            y - r * (theta_next.cos() - theta.cos()),
            wrap_angle(theta_next),
        )
    }
}

/// Apply velocity and acceleration limits to a commanded (v, omega).
pub fn clamp_command(
    previous: (f64, f64),
    commanded: (f64, f64),
    limits: &RobotLimits,
    dt: f64,
) -> (f64, f64) {
    let (v_prev, w_prev) = previous;
    let (v_cmd, w_cmd) = commanded;
    let dv = limits.a_max * dt;
    let dw = limits.alpha_max * dt;
    let v = v_cmd
        .clamp(v_prev - dv, v_prev + dv)
        .clamp(-limits.v_max, limits.v_max);
    let w = w_cmd
        .clamp(w_prev - dw, w_prev + dw)
        .clamp(-limits.omega_max, limits.omega_max);
    (v, w)
}

/// A disc participating in overlap resolution. `inv_mass` 0 means the body
/// is kinematic and never moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactBody {
    pub position: Vec2,
    pub radius: f64,
    pub inv_mass: f64,
}

impl ContactBody {
    pub fn with_mass(position: Vec2, radius: f64, mass: f64) -> Self {
        ContactBody {
            position,
            radius,
            inv_mass: 1.0 / mass,
        }
    }

    pub fn kinematic(position: Vec2, radius: f64) -> Self {
        ContactBody {
            position,
            radius,
            inv_mass: 0.0,
        }
    }
}

/// Separate every penetrating pair along its contact normal, splitting the
/// correction inversely proportional to effective mass. Fixed iteration
/// count; chains may keep a small residual.
pub fn resolve_overlaps(bodies: &mut [ContactBody], iterations: usize) {
    let n = bodies.len();
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    resolve_overlap_pairs(bodies, &pairs, iterations);
}

/// As [`resolve_overlaps`] but over a precomputed candidate pair list.
pub fn resolve_overlap_pairs(
    bodies: &mut [ContactBody],
    pairs: &[(usize, usize)],
    iterations: usize,
) {
    for _ in 0..iterations {
        let mut moved = false;
        for &(i, j) in pairs {
            let target = bodies[i].radius + bodies[j].radius;
            let delta = bodies[j].position - bodies[i].position;
            let dist = delta.length();
            if dist >= target {
                continue;
            }
            let normal = if dist > 1e-12 {
                delta * (1.0 / dist)
            } else {
                Vec2::new(1.0, 0.0)
            };
            let inv_sum = bodies[i].inv_mass + bodies[j].inv_mass;
            if inv_sum <= 0.0 {
                continue;
            }
            let correction = target - dist;
            let share_i = bodies[i].inv_mass / inv_sum;
            let share_j = bodies[j].inv_mass / inv_sum;
            bodies[i].position -= normal * (correction * share_i);
            bodies[j].position += normal * (correction * share_j);
            moved = true;
        }
        if !moved {
            break;
        }
    }
}

/// Wrap the coordinate along the agent's flow axis modulo the corridor
/// extent on that axis; the transverse coordinate is untouched.
pub fn wrap_agent(position: Vec2, flow_group: FlowGroup, world: &WorldSpec) -> Vec2 {
    if flow_group.along_x() {
        Vec2::new(position.x.rem_euclid(world.length), position.y)
    } else {
        Vec2::new(position.x, position.y.rem_euclid(world.width))
    }
}

/// Run-level simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    pub limits: RobotLimits,
    pub robot: RobotSpec,
    /// Effective robot mass in overlap resolution; `None` treats the robot
    /// as a kinematic body that pushes agents without being pushed.
    pub robot_contact_mass: Option<f64>,
    pub agent_contact_mass: f64,
    pub resolve_iterations: usize,
    pub lidar: Option<LidarSpec>,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            dt: 0.05,
            limits: RobotLimits::default(),
            robot: RobotSpec::default(),
            robot_contact_mass: None,
            agent_contact_mass: AGENT_CONTACT_MASS,
            resolve_iterations: RESOLVE_ITERATIONS,
            lidar: None,
        }
    }
}

/// One scenario run in progress.
pub struct Simulation {
    pub world: WorldSpec,
    pub goal: GoalSpec,
    pub crowd_config: CrowdModelConfig,
    pub controller: Controller,
    pub params: SimParams,
    pub agents: Vec<AgentState>,
    pub robot: RobotState,
    pub clock: SimClock,
    pub start_position: Vec2,
    rng: ChaCha8Rng,
    grid: NeighborGrid,
    scratch: CrowdScratch,
    in_contact: Vec<bool>,
    new_velocities: Vec<Vec2>,
    bodies: Vec<ContactBody>,
    pair_scratch: Vec<(usize, usize)>,
    query_scratch: Vec<u32>,
}

impl Simulation {
    pub fn new(
        world: WorldSpec,
        goal: GoalSpec,
        crowd_config: CrowdModelConfig,
        controller: Controller,
        params: SimParams,
        agents: Vec<AgentState>,
        rng: ChaCha8Rng,
    ) -> Self {
        let robot = RobotState::from_spec(&params.robot);
        let cell = crowd_config.interaction_range / 2.0;
        let n = agents.len();
        Simulation {
            start_position: robot.position(),
            grid: NeighborGrid::new(&world, cell),
            in_contact: vec![false; n],
            new_velocities: vec![Vec2::ZERO; n],
            bodies: Vec::with_capacity(n + 1),
            pair_scratch: Vec::new(),
            query_scratch: Vec::new(),
            scratch: CrowdScratch::default(),
            world,
            goal,
            crowd_config,
            controller,
            params,
            agents,
            robot,
            clock: SimClock::new(params.dt),
            rng,
        }
    }

    /// Progress of the robot along the goal direction since the start.
    pub fn progress(&self) -> f64 {
        (self.robot.position() - self.start_position).dot(self.goal.direction)
    }

    /// Initial record at t = 0, before any step has run.
    pub fn initial_record(&self) -> StepRecord {
        StepRecord::capture(0.0, &self.robot, &self.agents, &[])
    }

    /// Advance the world by one step and report the resulting state.
    pub fn step(&mut self) -> Result<StepRecord, SimError> {
        let dt = self.params.dt;

        // (1) Freeze the world as of time t.
        self.scratch.load_positions(&self.agents);
        self.grid.rebuild(positions(&self.scratch));

        // (2) Controller command from the frozen view.
        let control_view = ControlView {
            robot: &self.robot,
            agents: &self.agents,
            world: &self.world,
            goal: &self.goal,
            limits: &self.params.limits,
            dt,
        };
        let commanded = self.controller.command(&control_view);
        let (v, omega) = clamp_command(
            (self.robot.v, self.robot.omega),
            commanded,
            &self.params.limits,
            dt,
        );

        // (3) Synchronous crowd update: every agent decides from time t.
        let robot_disc = RobotDisc {
            position: self.robot.position(),
            velocity: self.robot.velocity_vec(),
            radius: self.robot.radius,
        };
        let view = CrowdView {
            agents: &self.agents,
            robot: Some(robot_disc),
            world: &self.world,
            grid: &self.grid,
        };
        for i in 0..self.agents.len() {
            self.new_velocities[i] =
                update_agent_velocity(i, &view, &self.crowd_config, dt, &mut self.scratch);
        }

        // (4) Integrate with limits clamped.
        self.robot.v = v;
        self.robot.omega = omega;
        let (x, y, theta) = integrate_diff_drive(
            (self.robot.pose.x, self.robot.pose.y, self.robot.pose.theta),
            v,
            omega,
            dt,
        );
        self.robot.pose.x = x;
        self.robot.pose.y = y;
        self.robot.pose.theta = theta;
        self.clamp_robot_to_walls();
        for (agent, &v_new) in self.agents.iter_mut().zip(&self.new_velocities) {
            agent.velocity = v_new.clamp_length(agent.max_speed());
            agent.position += agent.velocity * dt;
        }

        // (5) Detect robot-agent contacts, then resolve all overlaps.
        let contacts = self.detect_contacts();
        self.resolve_all_overlaps();

        // (6) Wrap agents that crossed the corridor ends of their flow axis.
        for agent in &mut self.agents {
            agent.position = wrap_agent(agent.position, agent.flow_group, &self.world);
        }

        // (7) Emit the record.
        self.clock.advance();
        for c in &contacts {
            self.in_contact[c.agent_id as usize] = true;
        }
        let mut record = StepRecord::capture(self.clock.t, &self.robot, &self.agents, &contacts);
        if let Some(lidar) = &self.params.lidar {
            let scan = lidar_scan(
                &self.robot.pose,
                &self.agents,
                &self.world,
                lidar,
                &mut self.rng,
            );
            record.lidar = Some(crate::record::LidarSample {
                ranges: scan.ranges,
                mask: scan.mask,
            });
        }
        self.check_finite()?;
        Ok(record)
    }

    fn clamp_robot_to_walls(&mut self) {
        // Hard clamp with sliding: the into-wall displacement component is
        // dropped, tangential motion is kept.
        let r = self.robot.radius;
        self.robot.pose.x = self.robot.pose.x.clamp(r, self.world.length - r);
        self.robot.pose.y = self.robot.pose.y.clamp(r, self.world.width - r);
    }

    fn detect_contacts(&mut self) -> ContactSet {
        let robot_pos = self.robot.position();
        let robot_vel = self.robot.velocity_vec();
        let mut contacts = Vec::new();
        let mut next_in_contact = vec![false; self.agents.len()];
        for agent in &self.agents {
            let combined = agent.radius + self.robot.radius;
            let delta = robot_pos - agent.position;
            let dist = delta.length();
            if dist >= combined {
                continue;
            }
            let normal = if dist > 1e-12 {
                delta * (1.0 / dist)
            } else {
                Vec2::new(1.0, 0.0)
            };
            let v_rel = (agent.velocity - robot_vel).dot(normal).max(0.0);
            let idx = agent.id as usize;
            contacts.push(Contact {
                agent_id: agent.id,
                depth: combined - dist,
                normal,
                v_rel,
                onset: !self.in_contact[idx],
            });
            next_in_contact[idx] = true;
        }
        self.in_contact = next_in_contact;
        contacts
    }

    fn resolve_all_overlaps(&mut self) {
        let n = self.agents.len();
        if n == 0 {
            return;
        }
        self.bodies.clear();
        let agent_mass = self.params.agent_contact_mass;
        for agent in &self.agents {
            self.bodies
                .push(ContactBody::with_mass(agent.position, agent.radius, agent_mass));
        }
        let robot_body = match self.params.robot_contact_mass {
            Some(mass) => ContactBody::with_mass(self.robot.position(), self.robot.radius, mass),
            None => ContactBody::kinematic(self.robot.position(), self.robot.radius),
        };
        self.bodies.push(robot_body);

        // Candidate pairs from the start-of-step grid; the pad covers one
        // step of motion plus resolution shifts on both sides.
        self.pair_scratch.clear();
        let max_radius = self
            .agents
            .iter()
            .map(|a| a.radius)
            .fold(0.0_f64, f64::max);
        for i in 0..n {
            let range = self.agents[i].radius + max_radius + 0.5;
            self.grid.query_into(
                positions(&self.scratch),
                self.agents[i].position,
                range,
                Some(i as u32),
                &mut self.query_scratch,
            );
            for &j in &self.query_scratch {
                if (j as usize) > i {
                    self.pair_scratch.push((i, j as usize));
                }
            }
        }
        let robot_range = self.robot.radius + max_radius + 0.5;
        self.grid.query_into(
            positions(&self.scratch),
            self.robot.position(),
            robot_range,
            None,
            &mut self.query_scratch,
        );
        for &j in &self.query_scratch {
            self.pair_scratch.push((j as usize, n));
        }

        resolve_overlap_pairs(
            &mut self.bodies,
            &self.pair_scratch,
            self.params.resolve_iterations,
        );
        for (agent, body) in self.agents.iter_mut().zip(&self.bodies) {
            agent.position = body.position;
        }
        if self.params.robot_contact_mass.is_some() {
            let pos = self.bodies[n].position;
            self.robot.pose.x = pos.x;
            self.robot.pose.y = pos.y;
            self.clamp_robot_to_walls();
        }
    }

    fn check_finite(&self) -> Result<(), SimError> {
        let pose_ok = self.robot.pose.x.is_finite()
            && self.robot.pose.y.is_finite()
            && self.robot.pose.theta.is_finite()
            && self.robot.v.is_finite()
            && self.robot.omega.is_finite();
        if !pose_ok {
            return Err(SimError::NonFiniteState {
                t: self.clock.t,
                step: self.clock.step_index,
                what: "robot state".to_string(),
            });
        }
        for agent in &self.agents {
            if !agent.position.is_finite() || !agent.velocity.is_finite() {
                return Err(SimError::NonFiniteState {
                    t: self.clock.t,
                    step: self.clock.step_index,
                    what: format!("agent {}", agent.id),
                });
            }
        }
        Ok(())
    }
}

fn positions(scratch: &CrowdScratch) -> &[Vec2] {
    scratch.positions()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn straight_line_integration() {
        let (x, y, theta) = integrate_diff_drive((0.0, 0.0, 0.0), 1.0, 0.0, 1.0);
        assert!((x - 1.0).abs() < 1e-12);
        assert!(y.abs() < 1e-12);
        assert!(theta.abs() < 1e-12);
    }

    #[test]
    fn pure_rotation() {
        let (x, y, theta) = integrate_diff_drive((0.0, 0.0, 0.0), 0.0, PI, 1.0);
        assert!(x.abs() < 1e-12);
        assert!(y.abs() < 1e-12);
        assert!((theta - PI).abs() < 1e-12);
    }

    #[test]
    fn quarter_circle_matches_fine_euler() {
        let (x, y, theta) = integrate_diff_drive((0.0, 0.0, 0.0), FRAC_PI_2, FRAC_PI_2, 1.0);
        assert!((x - 1.0).abs() < 1e-12);
        assert!((y - 1.0).abs() < 1e-12);
        assert!((theta - FRAC_PI_2).abs() < 1e-12);

        // Independent oracle: fine-grained Euler integration.
        let steps = 2_000_000;
        let dt = 1.0 / steps as f64;
        let (mut ex, mut ey, mut eth) = (0.0_f64, 0.0_f64, 0.0_f64);
        for _ in 0..steps {
            ex += FRAC_PI_2 * eth.cos() * dt;
            ey += FRAC_PI_2 * eth.sin() * dt;
            eth += FRAC_PI_2 * dt;
        }
        assert!((x - ex).abs() < 1e-5);
        assert!((y - ey).abs() < 1e-5);
    }

    #[test]
    fn clamp_limits_acceleration_and_speed() {
        let limits = RobotLimits::default();
        let (v, _) = clamp_command((0.0, 0.0), (1.0, 0.0), &limits, 0.05);
        assert!((v - 0.25).abs() < 1e-12);

        let (v, w) = clamp_command((0.5, 1.0), (0.55, 1.1), &limits, 0.05);
        assert_eq!((v, w), (0.55, 1.1));

        let (v, _) = clamp_command((1.0, 0.0), (2.0, 0.0), &limits, 0.05);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn equal_mass_overlap_splits_symmetrically() {
        let mut bodies = vec![
            ContactBody::with_mass(Vec2::new(0.0, 0.0), 0.3, 70.0),
            ContactBody::with_mass(Vec2::new(0.5, 0.0), 0.3, 70.0),
        ];
        resolve_overlaps(&mut bodies, RESOLVE_ITERATIONS);
        let dist = bodies[0].position.distance(bodies[1].position);
        assert!((dist - 0.6).abs() < 1e-9);
        assert!((bodies[0].position.x + 0.05).abs() < 1e-9);
        assert!((bodies[1].position.x - 0.55).abs() < 1e-9);
    }

    #[test]
    fn robot_agent_overlap_splits_by_inverse_mass() {
        // 20 kg robot vs 70 kg agent penetrating 0.09 m: the robot takes
        // 70/90 of the correction, the agent 20/90.
        let robot_radius = 0.18;
        let agent_radius = 0.3;
        let start_gap = robot_radius + agent_radius - 0.09;
        let mut bodies = vec![
            ContactBody::with_mass(Vec2::new(0.0, 0.0), robot_radius, 20.0),
            ContactBody::with_mass(Vec2::new(start_gap, 0.0), agent_radius, 70.0),
        ];
        resolve_overlaps(&mut bodies, RESOLVE_ITERATIONS);
        assert!((bodies[0].position.x - (-0.07)).abs() < 1e-9);
        assert!((bodies[1].position.x - (start_gap + 0.02)).abs() < 1e-9);
    }

    #[test]
    fn kinematic_body_never_moves() {
        let mut bodies = vec![
            ContactBody::kinematic(Vec2::new(0.0, 0.0), 0.18),
            ContactBody::with_mass(Vec2::new(0.3, 0.0), 0.3, 70.0),
        ];
        resolve_overlaps(&mut bodies, RESOLVE_ITERATIONS);
        assert_eq!(bodies[0].position, Vec2::ZERO);
        assert!((bodies[1].position.x - 0.48).abs() < 1e-9);
    }

    #[test]
    fn no_penetration_keeps_positions() {
        let mut bodies = vec![
            ContactBody::with_mass(Vec2::new(0.0, 0.0), 0.3, 70.0),
            ContactBody::with_mass(Vec2::new(0.7, 0.0), 0.3, 70.0),
        ];
        let before = bodies.clone();
        resolve_overlaps(&mut bodies, RESOLVE_ITERATIONS);
        assert_eq!(bodies, before);
    }

    #[test]
    fn wrap_follows_the_flow_axis_only() {
        let world = WorldSpec::standard();
        let wrapped = wrap_agent(Vec2::new(50.1, 3.3), FlowGroup::PlusX, &world);
        assert!((wrapped.x - 0.1).abs() < 1e-9);
        assert_eq!(wrapped.y, 3.3);

        let wrapped = wrap_agent(Vec2::new(12.0, 10.2), FlowGroup::PlusY, &world);
        assert_eq!(wrapped.x, 12.0);
        assert!((wrapped.y - 0.2).abs() < 1e-9);

        let wrapped = wrap_agent(Vec2::new(-0.4, 3.3), FlowGroup::MinusX, &world);
        assert!((wrapped.x - 49.6).abs() < 1e-9);

        let inside = Vec2::new(25.0, 5.0);
        assert_eq!(wrap_agent(inside, FlowGroup::PlusX, &world), inside);
    }
}
