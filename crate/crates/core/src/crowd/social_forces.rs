//! Social-force pedestrian model: goal attraction plus exponential repulsion
//! from nearby agents and walls.

use crate::math::Vec2;
use crate::world::{AgentState, WorldSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SocialForcesParams {
    /// Relaxation time of the goal-attraction term.
    pub tau_relax: f64,
    /// Repulsion strength A (m/s^2).
    pub strength: f64,
    /// Repulsion range B (m) against other bodies.
    pub range: f64,
    /// Repulsion range against walls (m).
    pub wall_range: f64,
}

impl Default for SocialForcesParams {
    fn default() -> Self {
        SocialForcesParams {
            tau_relax: 0.5,
            strength: 2.0,
            range: 0.35,
            wall_range: 0.2,
        }
    }
}

/// A circular body the model reacts to (another agent or the robot).
#[derive(Debug, Clone, Copy)]
pub struct RepulsionSource {
    pub position: Vec2,
    pub radius: f64,
}

/// Acceleration demanded by the social-force model for one agent.
///
/// Coincident centers repel along +x so the result stays deterministic.
pub fn social_forces_accel(
    agent: &AgentState,
    sources: &[RepulsionSource],
    world: &WorldSpec,
    params: &SocialForcesParams,
) -> Vec2 {
    let mut accel =
        (agent.preferred_velocity() - agent.velocity) * (1.0 / params.tau_relax);

    for src in sources {
        let offset = agent.position - src.position;
        let dist = offset.length();
        let away = if dist > 1e-12 {
            offset * (1.0 / dist)
        } else {
            Vec2::new(1.0, 0.0)
        };
        let overlap = agent.radius + src.radius - dist;
        accel += away * (params.strength * (overlap / params.range).exp());
    }

    for (dist, inward) in world.wall_distances(agent.position) {
        accel += inward * (params.strength * ((agent.radius - dist) / params.wall_range).exp());
    }

    accel
}
