//! Sampled velocity-space avoidance: candidates on a polar grid are scored by
//! time-to-collision against neighbors (with reciprocity) plus deviation from
//! the preferred velocity.

use crate::math::Vec2;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RvoSampledParams {
    /// Candidate directions around the goal direction.
    pub directions: u32,
    /// Candidate speed levels per direction.
    pub speeds: u32,
    /// Weight of the time-to-collision penalty (s * m/s).
    pub ttc_weight: f64,
    /// Floor for the time-to-collision in the penalty denominator (s).
    pub ttc_floor: f64,
}

impl Default for RvoSampledParams {
    fn default() -> Self {
        RvoSampledParams {
            directions: 12,
            speeds: 6,
            ttc_weight: 1.0,
            ttc_floor: 0.05,
        }
    }
}

/// A neighbor as seen from the deciding agent.
#[derive(Debug, Clone, Copy)]
pub struct NeighborBody {
    /// Neighbor center minus own center.
    pub rel_position: Vec2,
    pub velocity: Vec2,
    /// Sum of both radii.
    pub combined_radius: f64,
}

/// Smallest t >= 0 with |rel_position + t * rel_velocity| = radius.
///
/// `rel_velocity` is the rate of change of the separation vector. Returns 0
/// when already overlapping, `None` when the discs never touch for t >= 0.
pub fn ttc_circle(rel_position: Vec2, rel_velocity: Vec2, radius: f64) -> Option<f64> {
    let c = rel_position.length_squared() - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let a = rel_velocity.length_squared();
    if a <= 1e-300 {
        return None;
    }
    let b = 2.0 * rel_position.dot(rel_velocity);
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / (2.0 * a);
    if t >= 0.0 {
        Some(t)
    } else {
        None
    }
}

/// Fill `out` with the fixed candidate set: preferred velocity, zero, then a
/// polar grid rotated to the goal direction. The order defines tie-breaking.
pub fn velocity_candidates(
    goal_direction: Vec2,
    preferred_speed: f64,
    params: &RvoSampledParams,
    out: &mut Vec<Vec2>,
) {
    out.clear();
    out.push(goal_direction * preferred_speed);
    out.push(Vec2::ZERO);
    for k in 0..params.directions {
        let angle = TAU * k as f64 / params.directions as f64;
        let (sin_a, cos_a) = angle.sin_cos();
        let dir = goal_direction.rotated_by(cos_a, sin_a);
        for j in 1..=params.speeds {
            let speed = preferred_speed * j as f64 / params.speeds as f64;
            out.push(dir * speed);
        }
    }
}

/// Minimum time-to-collision of candidate `c` against all neighbors, under
/// reciprocity: the agent pretends to change velocity by twice the actual
/// step so that the (assumed cooperating) neighbor covers the other half.
fn min_ttc(
    candidate: Vec2,
    current_velocity: Vec2,
    neighbors: &[NeighborBody],
    horizon: f64,
    floor: f64,
) -> f64 {
    let effective = candidate * 2.0 - current_velocity;
    let mut ttc_min = horizon;
    for n in neighbors {
        // Separation changes at neighbor velocity minus own effective velocity.
        if let Some(t) = ttc_circle(n.rel_position, n.velocity - effective, n.combined_radius) {
            if t < ttc_min {
                ttc_min = t;
                if ttc_min <= floor {
                    break; // penalty saturates below the floor
                }
            }
        }
    }
    ttc_min
}

fn candidate_cost_given_ttc(
    candidate: Vec2,
    v_pref: Vec2,
    ttc_min: f64,
    horizon: f64,
    params: &RvoSampledParams,
) -> f64 {
    let deviation = (candidate - v_pref).length();
    if ttc_min >= horizon {
        deviation
    } else {
        deviation + params.ttc_weight / ttc_min.max(params.ttc_floor)
    }
}

/// Cost of one candidate; public so exhaustive-scan oracles can reuse it.
pub fn candidate_cost(
    candidate: Vec2,
    current_velocity: Vec2,
    v_pref: Vec2,
    neighbors: &[NeighborBody],
    horizon: f64,
    params: &RvoSampledParams,
) -> f64 {
    let ttc = min_ttc(
        candidate,
        current_velocity,
        neighbors,
        horizon,
        params.ttc_floor,
    );
    candidate_cost_given_ttc(candidate, v_pref, ttc, horizon, params)
}

/// Pick the candidate with minimal cost; ties go to the earlier candidate.
///
/// The deviation term is a lower bound on the cost, so candidates whose
/// deviation already exceeds the best cost skip the neighbor scan entirely;
/// the selected candidate and its cost equal the exhaustive evaluation.
pub fn rvo_sampled_velocity(
    current_velocity: Vec2,
    goal_direction: Vec2,
    preferred_speed: f64,
    neighbors: &[NeighborBody],
    horizon: f64,
    params: &RvoSampledParams,
    candidates: &mut Vec<Vec2>,
) -> Vec2 {
    velocity_candidates(goal_direction, preferred_speed, params, candidates);
    let v_pref = candidates[0];
    let mut best = v_pref;
    let mut best_cost = f64::INFINITY;
    for &c in candidates.iter() {
        let deviation = (c - v_pref).length();
        if deviation >= best_cost {
            continue;
        }
        let ttc = min_ttc(c, current_velocity, neighbors, horizon, params.ttc_floor);
        let cost = candidate_cost_given_ttc(c, v_pref, ttc, horizon, params);
        if cost < best_cost {
            best_cost = cost;
            best = c;
        }
    }
    best
}
