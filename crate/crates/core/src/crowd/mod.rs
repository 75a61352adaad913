//! Crowd agent models and the per-step velocity dispatch.

pub mod grid;
pub mod orca;
pub mod rvo;
pub mod social_forces;

use crate::math::Vec2;
use crate::world::{AgentState, WorldSpec};
use grid::NeighborGrid;
use rvo::{NeighborBody, RvoSampledParams};
use serde::{Deserialize, Serialize};
use social_forces::{RepulsionSource, SocialForcesParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrowdAlgorithm {
    SocialForces,
    RvoSampled,
    Orca,
}

/// Full configuration of a crowd behavior model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrowdModelConfig {
    /// Short label used in scenario ids and report headers.
    pub label: String,
    pub algorithm: CrowdAlgorithm,
    /// Anticipation horizon for the velocity-obstacle models (s).
    pub horizon: f64,
    /// Whether agents include the robot among the bodies they avoid.
    pub reactive_to_robot: bool,
    pub preferred_speed: f64,
    /// Cap on social-force acceleration magnitude (m/s^2).
    #[serde(default = "default_max_accel")]
    pub max_accel: f64,
    /// Range within which other bodies are considered (m).
    #[serde(default = "default_interaction_range")]
    pub interaction_range: f64,
    #[serde(default)]
    pub social_forces: SocialForcesParams,
    #[serde(default)]
    pub rvo: RvoSampledParams,
}

fn default_max_accel() -> f64 {
    10.0
}

fn default_interaction_range() -> f64 {
    5.0
}

impl CrowdModelConfig {
    pub fn social_forces(label: &str, reactive: bool) -> Self {
        CrowdModelConfig {
            label: label.to_string(),
            algorithm: CrowdAlgorithm::SocialForces,
            horizon: 1.5,
            reactive_to_robot: reactive,
            preferred_speed: 1.4,
            max_accel: default_max_accel(),
            interaction_range: default_interaction_range(),
            social_forces: SocialForcesParams::default(),
            rvo: RvoSampledParams::default(),
        }
    }

    pub fn rvo_sampled(label: &str, horizon: f64, reactive: bool) -> Self {
        CrowdModelConfig {
            label: label.to_string(),
            algorithm: CrowdAlgorithm::RvoSampled,
            horizon,
            reactive_to_robot: reactive,
            preferred_speed: 1.4,
            max_accel: default_max_accel(),
            interaction_range: default_interaction_range(),
            social_forces: SocialForcesParams::default(),
            rvo: RvoSampledParams::default(),
        }
    }

    pub fn orca(label: &str, horizon: f64, reactive: bool) -> Self {
        CrowdModelConfig {
            algorithm: CrowdAlgorithm::Orca,
            ..Self::rvo_sampled(label, horizon, reactive)
        }
    }
}

/// The five crowd configurations of the standard suite.
pub fn standard_crowd_configs() -> Vec<CrowdModelConfig> {
    vec![
        CrowdModelConfig::social_forces("sf_re", true),
        CrowdModelConfig::social_forces("sf_nr", false),
        CrowdModelConfig::rvo_sampled("rvo05_re", 0.5, true),
        CrowdModelConfig::rvo_sampled("rvo15_re", 1.5, true),
        CrowdModelConfig::rvo_sampled("rvo15_nr", 1.5, false),
    ]
}

/// The robot as crowd agents see it: a moving disc.
#[derive(Debug, Clone, Copy)]
pub struct RobotDisc {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// Frozen view of the world at the start of a step.
pub struct CrowdView<'a> {
    pub agents: &'a [AgentState],
    /// Present only when a robot exists in the world; non-reactive configs
    /// ignore it regardless.
    pub robot: Option<RobotDisc>,
    pub world: &'a WorldSpec,
    pub grid: &'a NeighborGrid,
}

/// Reusable per-step scratch buffers for the dispatch below.
#[derive(Default)]
pub struct CrowdScratch {
    ids: Vec<u32>,
    neighbors: Vec<NeighborBody>,
    sources: Vec<RepulsionSource>,
    candidates: Vec<Vec2>,
    positions: Vec<Vec2>,
}

impl CrowdScratch {
    /// Cache agent positions once per step for grid queries.
    pub fn load_positions(&mut self, agents: &[AgentState]) {
        self.positions.clear();
        self.positions.extend(agents.iter().map(|a| a.position));
    }

    /// Positions cached by the last [`CrowdScratch::load_positions`].
    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }
}

/// New velocity for agent `index`, from the frozen view only. Pure given the
/// view, so agents may be evaluated in any order.
pub fn update_agent_velocity(
    index: usize,
    view: &CrowdView<'_>,
    config: &CrowdModelConfig,
    dt: f64,
    scratch: &mut CrowdScratch,
) -> Vec2 {
    let agent = &view.agents[index];
    let robot = if config.reactive_to_robot {
        view.robot
    } else {
        None
    };
    view.grid.query_into(
        &scratch.positions,
        agent.position,
        config.interaction_range,
        Some(agent.id),
        &mut scratch.ids,
    );

    match config.algorithm {
        CrowdAlgorithm::SocialForces => {
            scratch.sources.clear();
            for &id in &scratch.ids {
                let other = &view.agents[id as usize];
                scratch.sources.push(RepulsionSource {
                    position: other.position,
                    radius: other.radius,
                });
            }
            if let Some(r) = robot {
                if (r.position - agent.position).length() <= config.interaction_range {
                    scratch.sources.push(RepulsionSource {
                        position: r.position,
                        radius: r.radius,
                    });
                }
            }
            let accel = social_forces::social_forces_accel(
                agent,
                &scratch.sources,
                view.world,
                &config.social_forces,
            )
            .clamp_length(config.max_accel);
            (agent.velocity + accel * dt).clamp_length(agent.max_speed())
        }
        CrowdAlgorithm::RvoSampled | CrowdAlgorithm::Orca => {
            build_neighbor_bodies(agent, view, robot, config, scratch);
            let v = match config.algorithm {
                CrowdAlgorithm::RvoSampled => rvo::rvo_sampled_velocity(
                    agent.velocity,
                    agent.goal_direction,
                    agent.preferred_speed,
                    &scratch.neighbors,
                    config.horizon,
                    &config.rvo,
                    &mut scratch.candidates,
                ),
                _ => orca::orca_velocity(
                    agent.velocity,
                    &scratch.neighbors,
                    config.horizon,
                    dt,
                    agent.preferred_velocity(),
                    agent.preferred_speed,
                ),
            };
            v.clamp_length(agent.max_speed())
        }
    }
}

fn build_neighbor_bodies(
    agent: &AgentState,
    view: &CrowdView<'_>,
    robot: Option<RobotDisc>,
    config: &CrowdModelConfig,
    scratch: &mut CrowdScratch,
) {
    scratch.neighbors.clear();
    for &id in &scratch.ids {
        let other = &view.agents[id as usize];
        scratch.neighbors.push(NeighborBody {
            rel_position: other.position - agent.position,
            velocity: other.velocity,
            combined_radius: agent.radius + other.radius,
        });
    }
    if let Some(r) = robot {
        let rel = r.position - agent.position;
        if rel.length() <= config.interaction_range {
            scratch.neighbors.push(NeighborBody {
                rel_position: rel,
                velocity: r.velocity,
                combined_radius: agent.radius + r.radius,
            });
        }
    }
    // Nearest-first ordering lets the sampling cost loop saturate early. The
    // input order is fixed (ids ascending, robot last), so the sort result is
    // deterministic for identical views.
    scratch.neighbors.sort_unstable_by(|a, b| {
        a.rel_position
            .length_squared()
            .partial_cmp(&b.rel_position.length_squared())
            .unwrap()
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::FlowGroup;

    fn make_agent(id: u32, pos: Vec2, vel: Vec2, dir: Vec2) -> AgentState {
        AgentState {
            id,
            position: pos,
            velocity: vel,
            radius: 0.3,
            preferred_speed: 1.4,
            goal_direction: dir,
            flow_group: FlowGroup::PlusX,
        }
    }

    fn view_with<'a>(
        agents: &'a [AgentState],
        grid: &'a mut NeighborGrid,
        world: &'a WorldSpec,
        robot: Option<RobotDisc>,
        scratch: &mut CrowdScratch,
    ) -> CrowdView<'a> {
        scratch.load_positions(agents);
        grid.rebuild(&scratch.positions);
        CrowdView {
            agents,
            robot,
            world,
            grid,
        }
    }

    #[test]
    fn non_reactive_ignores_robot() {
        let world = WorldSpec::standard();
        let agents = vec![make_agent(
            0,
            Vec2::new(25.0, 5.0),
            Vec2::new(1.4, 0.0),
            Vec2::new(1.0, 0.0),
        )];
        let robot = RobotDisc {
            position: Vec2::new(26.0, 5.0),
            velocity: Vec2::new(-1.0, 0.0),
            radius: 0.18,
        };
        for algorithm in [
            CrowdAlgorithm::SocialForces,
            CrowdAlgorithm::RvoSampled,
            CrowdAlgorithm::Orca,
        ] {
            let mut config = CrowdModelConfig::rvo_sampled("t", 1.5, false);
            config.algorithm = algorithm;
            let mut grid = NeighborGrid::new(&world, 2.5);
            let mut scratch = CrowdScratch::default();
            let view = view_with(&agents, &mut grid, &world, Some(robot), &mut scratch);
            let with_robot = update_agent_velocity(0, &view, &config, 0.05, &mut scratch);
            let mut grid2 = NeighborGrid::new(&world, 2.5);
            let mut scratch2 = CrowdScratch::default();
            let view2 = view_with(&agents, &mut grid2, &world, None, &mut scratch2);
            let without_robot = update_agent_velocity(0, &view2, &config, 0.05, &mut scratch2);
            assert_eq!(with_robot, without_robot);
        }
    }

    #[test]
    fn reactive_agent_responds_to_robot_on_collision_course() {
        let world = WorldSpec::standard();
        let agents = vec![make_agent(
            0,
            Vec2::new(25.0, 5.0),
            Vec2::new(1.4, 0.0),
            Vec2::new(1.0, 0.0),
        )];
        let robot = RobotDisc {
            position: Vec2::new(26.0, 5.0),
            velocity: Vec2::new(-1.0, 0.0),
            radius: 0.18,
        };
        let config = CrowdModelConfig::rvo_sampled("t", 1.5, true);
        let mut grid = NeighborGrid::new(&world, 2.5);
        let mut scratch = CrowdScratch::default();
        let view = view_with(&agents, &mut grid, &world, Some(robot), &mut scratch);
        let with_robot = update_agent_velocity(0, &view, &config, 0.05, &mut scratch);

        let mut grid2 = NeighborGrid::new(&world, 2.5);
        let mut scratch2 = CrowdScratch::default();
        let view2 = view_with(&agents, &mut grid2, &world, None, &mut scratch2);
        let without_robot = update_agent_velocity(0, &view2, &config, 0.05, &mut scratch2);
        assert_ne!(with_robot, without_robot);
    }

    #[test]
    fn social_forces_zero_dt_keeps_velocity() {
        let world = WorldSpec::standard();
        let agents = vec![make_agent(
            0,
            Vec2::new(25.0, 5.0),
            Vec2::new(0.7, 0.1),
            Vec2::new(1.0, 0.0),
        )];
        let config = CrowdModelConfig::social_forces("t", true);
        let mut grid = NeighborGrid::new(&world, 2.5);
        let mut scratch = CrowdScratch::default();
        let view = view_with(&agents, &mut grid, &world, None, &mut scratch);
        let v = update_agent_velocity(0, &view, &config, 0.0, &mut scratch);
        assert_eq!(v, Vec2::new(0.7, 0.1));
    }

    #[test]
    fn standard_set_has_five_distinct_configs() {
        let configs = standard_crowd_configs();
        assert_eq!(configs.len(), 5);
        let mut labels: Vec<&str> = configs.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels.len(), 5);
        assert_eq!(
            configs
                .iter()
                .filter(|c| c.algorithm == CrowdAlgorithm::RvoSampled)
                .count(),
            3
        );
    }
}
