//! Simulated perception: planar LiDAR with a per-beam agent-id mask, and
//! noisy odometry. Neither is consumed by the standard suite controllers;
//! both can be recorded for downstream consumers.

use crate::math::Vec2;
use crate::world::{AgentState, Pose, WorldSpec};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarSpec {
    pub beams: u32,
    /// Angular span of the fan (rad); a full turn by default.
    pub span: f64,
    pub max_range: f64,
    /// Gaussian range noise sigma (m).
    pub noise_sigma: f64,
    /// Probability that a beam drops out and reports max range.
    pub dropout: f64,
    /// Sensor offset in the robot frame (m).
    pub mount_offset: Vec2,
}

impl Default for LidarSpec {
    fn default() -> Self {
        LidarSpec {
            beams: 360,
            span: TAU,
            max_range: 20.0,
            noise_sigma: 0.01,
            dropout: 0.0,
            mount_offset: Vec2::ZERO,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan {
    /// Measured range per beam; max range when nothing was hit.
    pub ranges: Vec<f64>,
    /// Id of the agent hit by each beam, before noise was applied.
    pub mask: Vec<Option<u32>>,
}

fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let rel = center - origin;
    let along = rel.dot(dir);
    let lateral_sq = rel.length_squared() - along * along;
    let disc = radius * radius - lateral_sq;
    if disc < 0.0 {
        return None;
    }
    let t = along - disc.sqrt();
    if t >= 0.0 {
        Some(t)
    } else {
        None
    }
}

fn ray_segment(origin: Vec2, dir: Vec2, a: Vec2, b: Vec2) -> Option<f64> {
    let seg = b - a;
    let denom = dir.cross(seg);
    if denom.abs() < 1e-15 {
        return None;
    }
    let rel = a - origin;
    let t = rel.cross(seg) / denom;
    let s = rel.cross(dir) / denom;
    if t >= 0.0 && (0.0..=1.0).contains(&s) {
        Some(t)
    } else {
        None
    }
}

/// Cast every beam against agents and walls; nearest hit wins. Noise is
/// added after the mask is decided; dropout replaces the beam with max
/// range and clears its mask entry.
pub fn lidar_scan<R: Rng>(
    pose: &Pose,
    agents: &[AgentState],
    world: &WorldSpec,
    spec: &LidarSpec,
    rng: &mut R,
) -> LidarScan {
    let origin = pose.position() + spec.mount_offset.rotated_by(pose.theta.cos(), pose.theta.sin());
    let walls = world.wall_segments();
    let mut ranges = Vec::with_capacity(spec.beams as usize);
    let mut mask = Vec::with_capacity(spec.beams as usize);
    let noise = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("sigma >= 0"))
    } else {
        None
    };
    for k in 0..spec.beams {
        let angle = pose.theta + spec.span * k as f64 / spec.beams as f64;
        let dir = Vec2::new(angle.cos(), angle.sin());
        let mut best = spec.max_range;
        let mut hit: Option<u32> = None;
        for agent in agents {
            if let Some(t) = ray_circle(origin, dir, agent.position, agent.radius) {
                if t < best {
                    best = t;
                    hit = Some(agent.id);
                }
            }
        }
        for (a, b) in walls {
            if let Some(t) = ray_segment(origin, dir, a, b) {
                if t < best {
                    best = t;
                    hit = None;
                }
            }
        }
        let mut measured = best;
        if let Some(noise) = &noise {
            measured += noise.sample(rng);
        }
        if spec.dropout > 0.0 && rng.random::<f64>() < spec.dropout {
            measured = spec.max_range;
            hit = None;
        }
        ranges.push(measured.clamp(f64::MIN_POSITIVE, spec.max_range));
        mask.push(hit);
    }
    LidarScan { ranges, mask }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdometryNoise {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_theta: f64,
}

/// Perturb a true pose delta with zero-mean Gaussian noise per component.
pub fn odometry<R: Rng>(true_delta: Pose, noise: &OdometryNoise, rng: &mut R) -> Pose {
    let mut sample = |sigma: f64| {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("sigma >= 0").sample(rng)
        } else {
            0.0
        }
    };
    Pose {
        x: true_delta.x + sample(noise.sigma_x),
        y: true_delta.y + sample(noise.sigma_y),
        theta: true_delta.theta + sample(noise.sigma_theta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::FlowGroup;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noiseless() -> LidarSpec {
        LidarSpec {
            noise_sigma: 0.0,
            ..Default::default()
        }
    }

    fn agent_at(id: u32, x: f64, y: f64) -> AgentState {
        AgentState {
            id,
            position: Vec2::new(x, y),
            velocity: Vec2::ZERO,
            radius: 0.3,
            preferred_speed: 1.4,
            goal_direction: Vec2::new(1.0, 0.0),
            flow_group: FlowGroup::PlusX,
        }
    }

    #[test]
    fn empty_world_reads_max_range_everywhere() {
        // A large empty arena so no wall is within range.
        let world = WorldSpec {
            length: 1000.0,
            width: 1000.0,
        };
        let pose = Pose::new(500.0, 500.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = lidar_scan(&pose, &[], &world, &noiseless(), &mut rng);
        assert!(scan.ranges.iter().all(|&r| r == 20.0));
        assert!(scan.mask.iter().all(|m| m.is_none()));
    }

    #[test]
    fn beam_zero_hits_agent_ahead() {
        let world = WorldSpec {
            length: 1000.0,
            width: 1000.0,
        };
        let pose = Pose::new(500.0, 500.0, 0.0);
        let agents = [agent_at(7, 502.0, 500.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = lidar_scan(&pose, &agents, &world, &noiseless(), &mut rng);
        assert!((scan.ranges[0] - 1.7).abs() < 1e-9);
        assert_eq!(scan.mask[0], Some(7));
    }

    #[test]
    fn perpendicular_beam_measures_wall_distance() {
        let world = WorldSpec::standard();
        let pose = Pose::new(25.0, 5.0, 0.0);
        let spec = noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let scan = lidar_scan(&pose, &[], &world, &spec, &mut rng);
        // Beam 90 of 360 points along +y; the top wall is 5 m away.
        assert!((scan.ranges[90] - 5.0).abs() < 1e-9);
        assert_eq!(scan.mask[90], None);
    }

    #[test]
    fn zero_sigma_odometry_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let delta = Pose::new(0.05, -0.01, 0.002);
        let out = odometry(delta, &OdometryNoise::default(), &mut rng);
        assert_eq!(out, delta);
    }

    #[test]
    fn seeded_odometry_reproduces() {
        let noise = OdometryNoise {
            sigma_x: 0.01,
            sigma_y: 0.01,
            sigma_theta: 0.001,
        };
        let delta = Pose::new(0.05, 0.0, 0.0);
        let a = odometry(delta, &noise, &mut ChaCha8Rng::seed_from_u64(9));
        let b = odometry(delta, &noise, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        assert_ne!(a.x, delta.x);
    }

    #[test]
    fn odometry_noise_is_zero_mean() {
        let noise = OdometryNoise {
            sigma_x: 0.01,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += odometry(Pose::new(1.0, 0.0, 0.0), &noise, &mut rng).x - 1.0;
        }
        let mean = sum / n as f64;
        // 3 sigma / sqrt(N) band.
        assert!(mean.abs() < 3.0 * 0.01 / (n as f64).sqrt(), "mean {mean}");
    }
}
