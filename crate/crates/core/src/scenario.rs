//! Scenario specification, the 100-cell standard suite, and crowd spawning.
//!
//! Scenario files are self-contained: agent placements are fixed at
//! generation time so every controller replays identical initial conditions.

use crate::crowd::{standard_crowd_configs, CrowdModelConfig};
use crate::error::SimError;
use crate::math::Vec2;
use crate::nav::{Controller, GoalSpec};
use crate::sensors::LidarSpec;
use crate::world::{AgentState, FlowGroup, Pose, WorldSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Crowd flow pattern relative to the robot's travel direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowKind {
    /// Same direction as the robot.
    #[serde(rename = "1d+")]
    OneDPlus,
    /// Facing the robot.
    #[serde(rename = "1d-")]
    OneDMinus,
    /// Both corridor directions, half each.
    #[serde(rename = "1dx")]
    OneDBoth,
    /// Crossing the robot path in one direction.
    #[serde(rename = "2d")]
    TwoD,
    /// Crossing in both directions, half each.
    #[serde(rename = "2dx")]
    TwoDBoth,
}

impl FlowKind {
    pub const ALL: [FlowKind; 5] = [
        FlowKind::OneDPlus,
        FlowKind::OneDMinus,
        FlowKind::OneDBoth,
        FlowKind::TwoD,
        FlowKind::TwoDBoth,
    ];

    /// Token used in scenario ids and file names.
    pub fn token(self) -> &'static str {
        match self {
            FlowKind::OneDPlus => "1dp",
            FlowKind::OneDMinus => "1dm",
            FlowKind::OneDBoth => "1dx",
            FlowKind::TwoD => "2d",
            FlowKind::TwoDBoth => "2dx",
        }
    }

    /// Goal group of the agent at `index` under this flow.
    pub fn group_for(self, index: usize) -> FlowGroup {
        match self {
            FlowKind::OneDPlus => FlowGroup::PlusX,
            FlowKind::OneDMinus => FlowGroup::MinusX,
            FlowKind::OneDBoth => {
                if index % 2 == 0 {
                    FlowGroup::PlusX
                } else {
                    FlowGroup::MinusX
                }
            }
            FlowKind::TwoD => FlowGroup::PlusY,
            FlowKind::TwoDBoth => {
                if index % 2 == 0 {
                    FlowGroup::PlusY
                } else {
                    FlowGroup::MinusY
                }
            }
        }
    }
}

/// Crowd size with its nominal density over the standard corridor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityLevel {
    pub count: u32,
    pub per_m2: f64,
}

impl DensityLevel {
    pub const STANDARD: [DensityLevel; 4] = [
        DensityLevel {
            count: 50,
            per_m2: 0.1,
        },
        DensityLevel {
            count: 100,
            per_m2: 0.2,
        },
        DensityLevel {
            count: 200,
            per_m2: 0.4,
        },
        DensityLevel {
            count: 350,
            per_m2: 0.7,
        },
    ];
}

/// One agent's initial condition as stored in a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentInit {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub radius: f64,
    pub preferred_speed: f64,
    pub goal: [f64; 2],
    pub group: FlowGroup,
}

impl AgentInit {
    pub fn to_state(&self) -> AgentState {
        AgentState {
            id: self.id,
            position: Vec2::new(self.x, self.y),
            velocity: Vec2::new(self.vx, self.vy),
            radius: self.radius,
            preferred_speed: self.preferred_speed,
            goal_direction: Vec2::new(self.goal[0], self.goal[1]),
            flow_group: self.group,
        }
    }

    pub fn from_state(a: &AgentState) -> Self {
        AgentInit {
            id: a.id,
            x: a.position.x,
            y: a.position.y,
            vx: a.velocity.x,
            vy: a.velocity.y,
            radius: a.radius,
            preferred_speed: a.preferred_speed,
            goal: [a.goal_direction.x, a.goal_direction.y],
            group: a.flow_group,
        }
    }
}

/// One benchmark cell, self-contained. Unknown keys are rejected, naming the
/// offending key in the diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub id: String,
    pub world: WorldSpec,
    pub flow: FlowKind,
    pub density: DensityLevel,
    pub crowd_config: CrowdModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<Controller>,
    pub seed: u64,
    pub agents: Vec<AgentInit>,
    pub goal: GoalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lidar: Option<LidarSpec>,
}

impl ScenarioSpec {
    pub fn agent_states(&self) -> Vec<AgentState> {
        self.agents.iter().map(AgentInit::to_state).collect()
    }

    pub fn file_name(&self) -> String {
        format!("{}.json", self.id)
    }
}

/// The whole generated suite plus the seed it grew from.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSpec {
    pub master_seed: u64,
    pub scenarios: Vec<ScenarioSpec>,
}

/// Manifest written next to the scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteManifest {
    pub master_seed: u64,
    pub crowd_configs: Vec<String>,
    pub files: Vec<String>,
}

/// Robot start pose used by every standard scenario.
pub fn standard_robot_start() -> Pose {
    Pose::new(1.0, 5.0, 0.0)
}

const DEFAULT_AGENT_RADIUS: f64 = 0.3;
const SPAWN_ATTEMPT_LIMIT: usize = 100_000;
const ROBOT_CLEARANCE: f64 = 1.0;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Per-cell seed derived from the master seed and the cell id.
pub fn derive_seed(master_seed: u64, cell_id: &str) -> u64 {
    splitmix64(master_seed ^ fnv1a64(cell_id.as_bytes()))
}

/// Rejection-sample non-overlapping agent positions inside the corridor,
/// keeping 1 m away from the robot start, and assign flow directions.
pub fn spawn_crowd(
    flow: FlowKind,
    count: u32,
    world: &WorldSpec,
    robot_start: Vec2,
    preferred_speed: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<AgentState>, SimError> {
    let radius = DEFAULT_AGENT_RADIUS;
    let min_separation = 2.0 * radius;
    let mut agents: Vec<AgentState> = Vec::with_capacity(count as usize);
    let mut attempts = 0usize;
    while agents.len() < count as usize {
        if attempts >= SPAWN_ATTEMPT_LIMIT {
            return Err(SimError::InfeasiblePlacement {
                requested: count as usize,
                placed: agents.len(),
                attempts,
            });
        }
        attempts += 1;
        let candidate = Vec2::new(
            rng.random_range(radius..world.length - radius),
            rng.random_range(radius..world.width - radius),
        );
        if (candidate - robot_start).length() < ROBOT_CLEARANCE {
            continue;
        }
        if agents
            .iter()
            .any(|a| (a.position - candidate).length() < min_separation)
        {
            continue;
        }
        let index = agents.len();
        let group = flow.group_for(index);
        let goal_direction = group.goal_direction();
        agents.push(AgentState {
            id: index as u32,
            position: candidate,
            velocity: goal_direction * preferred_speed,
            radius,
            preferred_speed,
            goal_direction,
            flow_group: group,
        });
    }
    Ok(agents)
}

/// Build the standard 100-cell suite: 5 flows x 4 densities x 5 crowd
/// configurations, placements frozen per cell.
pub fn generate_suite(master_seed: u64) -> Result<SuiteSpec, SimError> {
    let world = WorldSpec::standard();
    let goal = GoalSpec::default();
    let robot_start = standard_robot_start().position();
    let mut scenarios = Vec::with_capacity(100);
    for flow in FlowKind::ALL {
        for density in DensityLevel::STANDARD {
            for config in standard_crowd_configs() {
                let id = format!("{}_n{:03}_{}", flow.token(), density.count, config.label);
                let seed = derive_seed(master_seed, &id);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let agents = spawn_crowd(
                    flow,
                    density.count,
                    &world,
                    robot_start,
                    config.preferred_speed,
                    &mut rng,
                )?;
                scenarios.push(ScenarioSpec {
                    id,
                    world,
                    flow,
                    density,
                    crowd_config: config,
                    controller: None,
                    seed,
                    agents: agents.iter().map(AgentInit::from_state).collect(),
                    goal,
                    lidar: None,
                });
            }
        }
    }
    Ok(SuiteSpec {
        master_seed,
        scenarios,
    })
}

/// Outcome of the per-step termination test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    GoalReached,
    TimedOut,
}

/// Goal takes precedence over the time limit at equality.
pub fn termination_check(progress: f64, t: f64, goal: &GoalSpec) -> RunStatus {
    if progress >= goal.target_progress {
        RunStatus::GoalReached
    } else if t >= goal.time_limit {
        RunStatus::TimedOut
    } else {
        RunStatus::Running
    }
}

pub fn save_suite(suite: &SuiteSpec, dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(suite.scenarios.len());
    for scenario in &suite.scenarios {
        let name = scenario.file_name();
        let mut body = serde_json::to_vec_pretty(scenario)?;
        body.push(b'\n');
        fs::write(dir.join(&name), body)?;
        files.push(name);
    }
    let manifest = SuiteManifest {
        master_seed: suite.master_seed,
        crowd_configs: standard_crowd_configs()
            .iter()
            .map(|c| c.label.clone())
            .collect(),
        files,
    };
    let mut body = serde_json::to_vec_pretty(&manifest)?;
    body.push(b'\n');
    fs::write(dir.join("suite.json"), body)?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, SimError> {
    let body = fs::read_to_string(path)?;
    serde_json::from_str(&body).map_err(|source| SimError::ScenarioParse {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_suite(dir: &Path) -> Result<(SuiteManifest, Vec<ScenarioSpec>), SimError> {
    let manifest_path = dir.join("suite.json");
    let manifest: SuiteManifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|source| SimError::ScenarioParse {
            path: manifest_path.display().to_string(),
            source,
        })?;
    let mut scenarios = Vec::with_capacity(manifest.files.len());
    for file in &manifest.files {
        scenarios.push(load_scenario(&dir.join(file))?);
    }
    Ok((manifest, scenarios))
}

pub fn suite_file_paths(dir: &Path, manifest: &SuiteManifest) -> Vec<PathBuf> {
    manifest.files.iter().map(|f| dir.join(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn standard_suite_counts_and_marginals() {
        let suite = generate_suite(42).unwrap();
        assert_eq!(suite.scenarios.len(), 100);
        let ids: HashSet<&str> = suite.scenarios.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids.len(), 100);
        for config in standard_crowd_configs() {
            let n = suite
                .scenarios
                .iter()
                .filter(|s| s.crowd_config.label == config.label)
                .count();
            assert_eq!(n, 20);
        }
        for density in DensityLevel::STANDARD {
            let n = suite
                .scenarios
                .iter()
                .filter(|s| s.density.count == density.count)
                .count();
            assert_eq!(n, 25);
        }
        for flow in FlowKind::ALL {
            let n = suite.scenarios.iter().filter(|s| s.flow == flow).count();
            assert_eq!(n, 20);
        }
    }

    #[test]
    fn same_master_seed_reproduces_identical_files() {
        let a = generate_suite(7).unwrap();
        let b = generate_suite(7).unwrap();
        for (sa, sb) in a.scenarios.iter().zip(&b.scenarios) {
            assert_eq!(
                serde_json::to_string(sa).unwrap(),
                serde_json::to_string(sb).unwrap()
            );
        }
    }

    #[test]
    fn spawn_respects_flow_directions_and_clearance() {
        let world = WorldSpec::standard();
        let robot_start = standard_robot_start().position();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let agents = spawn_crowd(FlowKind::OneDPlus, 50, &world, robot_start, 1.4, &mut rng).unwrap();
        assert_eq!(agents.len(), 50);
        assert!(agents
            .iter()
            .all(|a| a.goal_direction == Vec2::new(1.0, 0.0)));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let agents = spawn_crowd(FlowKind::OneDBoth, 100, &world, robot_start, 1.4, &mut rng).unwrap();
        let plus = agents
            .iter()
            .filter(|a| a.goal_direction.x > 0.0)
            .count();
        assert_eq!(plus, 50);

        for (i, a) in agents.iter().enumerate() {
            assert!((a.position - robot_start).length() >= 1.0);
            assert!(world.contains(a.position));
            for b in &agents[i + 1..] {
                assert!(
                    (a.position - b.position).length() >= 0.6 - 1e-12,
                    "spawned agents too close"
                );
            }
        }
    }

    #[test]
    fn crossing_flows_split_along_y() {
        let world = WorldSpec::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let agents = spawn_crowd(
            FlowKind::TwoDBoth,
            60,
            &world,
            standard_robot_start().position(),
            1.4,
            &mut rng,
        )
        .unwrap();
        let up = agents.iter().filter(|a| a.goal_direction.y > 0.0).count();
        assert_eq!(up, 30);
        assert!(agents.iter().all(|a| a.goal_direction.x == 0.0));
    }

    #[test]
    fn termination_precedence() {
        let goal = GoalSpec::default();
        assert_eq!(termination_check(40.01, 55.0, &goal), RunStatus::GoalReached);
        assert_eq!(termination_check(12.0, 180.0, &goal), RunStatus::TimedOut);
        assert_eq!(termination_check(39.9, 10.0, &goal), RunStatus::Running);
        // Goal wins at the shared boundary.
        assert_eq!(termination_check(40.0, 180.0, &goal), RunStatus::GoalReached);
    }

    #[test]
    fn unknown_scenario_keys_are_rejected_by_name() {
        let suite = generate_suite(1).unwrap();
        let mut value = serde_json::to_value(&suite.scenarios[0]).unwrap();
        value
            .as_object_mut()
            .unwrap()
            .insert("gravity".to_string(), serde_json::json!(9.81));
        let err = serde_json::from_value::<ScenarioSpec>(value).unwrap_err();
        assert!(err.to_string().contains("gravity"), "{err}");
    }
}
