//! Dynamic-window controller: sample reachable (v, omega) pairs, drop the
//! ones that cannot stop before the nearest obstacle along their arc, and
//! maximize a weighted heading/clearance/velocity objective.
//!
//! Agents enter the window as static points inflated by both radii.

use super::ControlView;
use crate::math::{wrap_angle, Vec2};
use crate::sim::EPS_OMEGA;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwaParams {
    pub samples_v: u32,
    pub samples_omega: u32,
    pub weight_heading: f64,
    pub weight_clearance: f64,
    pub weight_velocity: f64,
    /// Prediction horizon for the heading term (s).
    pub horizon: f64,
    /// Clearance beyond this arc length does not score higher (m).
    pub clearance_cap: f64,
}

impl Default for DwaParams {
    fn default() -> Self {
        DwaParams {
            samples_v: 11,
            samples_omega: 21,
            weight_heading: 0.8,
            weight_clearance: 0.1,
            weight_velocity: 0.1,
            horizon: 1.5,
            clearance_cap: 3.0,
        }
    }
}

/// An inflated obstacle point: contact when the robot center is within
/// `radius` of `center`.
#[derive(Debug, Clone, Copy)]
pub struct ObstaclePoint {
    pub center: Vec2,
    pub radius: f64,
}

const WALL_SAMPLE_SPACING: f64 = 0.25;

/// Arc length the robot can travel along the (v, omega) circle before
/// hitting any obstacle, capped at `cap`. Pure geometry on the snapshot.
pub fn arc_clearance(
    pose: (f64, f64, f64),
    v: f64,
    omega: f64,
    obstacles: &[ObstaclePoint],
    cap: f64,
) -> f64 {
    let (x, y, theta) = pose;
    let p = Vec2::new(x, y);
    if v.abs() < 1e-9 {
        // Turning in place (or stopped) does not translate.
        return cap;
    }
    let heading = Vec2::new(theta.cos(), theta.sin());
    let mut nearest = cap;
    if omega.abs() < EPS_OMEGA {
        for ob in obstacles {
            let rel = ob.center - p;
            if rel.length_squared() <= ob.radius * ob.radius {
                return 0.0;
            }
            let along = rel.dot(heading);
            if along <= 0.0 {
                continue;
            }
            let lateral_sq = rel.length_squared() - along * along;
            let disc = ob.radius * ob.radius - lateral_sq;
            if disc < 0.0 {
                continue;
            }
            nearest = nearest.min(along - disc.sqrt());
        }
        return nearest.max(0.0);
    }

    let signed_radius = v / omega;
    let center = p + heading.perp() * signed_radius;
    let arc_radius = signed_radius.abs();
    let phi0 = (p.y - center.y).atan2(p.x - center.x);
    let travel_sign = omega.signum();
    for ob in obstacles {
        let rel = ob.center - p;
        if rel.length_squared() <= ob.radius * ob.radius {
            return 0.0;
        }
        let to_ob = ob.center - center;
        let dc = to_ob.length();
        if dc < 1e-12 {
            continue; // concentric and not overlapping: never hit
        }
        let q = (arc_radius * arc_radius + dc * dc - ob.radius * ob.radius)
            / (2.0 * arc_radius * dc);
        if !(-1.0..=1.0).contains(&q) {
            continue;
        }
        let psi = q.acos();
        let phi_ob = to_ob.y.atan2(to_ob.x);
        for entry in [phi_ob - psi, phi_ob + psi] {
            let forward = (travel_sign * (entry - phi0)).rem_euclid(TAU);
            nearest = nearest.min(arc_radius * forward);
        }
    }
    nearest.max(0.0)
}

fn linspace(lo: f64, hi: f64, n: u32) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| lo + step * i as f64)
}

/// Gather the obstacle snapshot: agent centers (inflated by both radii) and
/// wall samples (inflated by the robot radius) near the robot. Points beyond
/// the clearance cap cannot change any score.
fn collect_obstacles(view: &ControlView<'_>, params: &DwaParams, out: &mut Vec<ObstaclePoint>) {
    let robot_pos = view.robot.position();
    let robot_radius = view.robot.radius;
    let mut max_inflation = robot_radius;
    for agent in view.agents {
        max_inflation = max_inflation.max(agent.radius + robot_radius);
    }
    let reach = params.clearance_cap + max_inflation + 1e-9;
    for agent in view.agents {
        if (agent.position - robot_pos).length() <= reach {
            out.push(ObstaclePoint {
                center: agent.position,
                radius: agent.radius + robot_radius,
            });
        }
    }
    // Walls sampled within reach of the robot.
    let world = view.world;
    let x_lo = (robot_pos.x - reach).max(0.0);
    let x_hi = (robot_pos.x + reach).min(world.length);
    let mut x = x_lo;
    while x <= x_hi {
        for wall_y in [0.0, world.width] {
            if (Vec2::new(x, wall_y) - robot_pos).length() <= reach {
                out.push(ObstaclePoint {
                    center: Vec2::new(x, wall_y),
                    radius: robot_radius,
                });
            }
        }
        x += WALL_SAMPLE_SPACING;
    }
    let y_lo = (robot_pos.y - reach).max(0.0);
    let y_hi = (robot_pos.y + reach).min(world.width);
    let mut y = y_lo;
    while y <= y_hi {
        for wall_x in [0.0, world.length] {
            if (Vec2::new(wall_x, y) - robot_pos).length() <= reach {
                out.push(ObstaclePoint {
                    center: Vec2::new(wall_x, y),
                    radius: robot_radius,
                });
            }
        }
        y += WALL_SAMPLE_SPACING;
    }
}

#[derive(Debug, Clone, Copy)]
struct WindowSample {
    v: f64,
    omega: f64,
    heading: f64,
    clearance: f64,
}

/// Choose the admissible window sample maximizing the DWA objective; ties go
/// to the lowest |omega|, then the lowest v. With no admissible sample the
/// command is maximum braking.
pub fn dwa_command(view: &ControlView<'_>, params: &DwaParams) -> (f64, f64) {
    let mut obstacles = Vec::new();
    collect_obstacles(view, params, &mut obstacles);

    let robot = view.robot;
    let limits = view.limits;
    let dt = view.dt;
    let goal_angle = view.goal.direction.y.atan2(view.goal.direction.x);

    let v_lo = (robot.v - limits.a_max * dt).max(0.0);
    let v_hi = (robot.v + limits.a_max * dt).min(limits.v_max);
    let w_lo = (robot.omega - limits.alpha_max * dt).max(-limits.omega_max);
    let w_hi = (robot.omega + limits.alpha_max * dt).min(limits.omega_max);

    let pose = (robot.pose.x, robot.pose.y, robot.pose.theta);
    let mut admissible: Vec<WindowSample> = Vec::new();
    for v in linspace(v_lo, v_hi, params.samples_v) {
        for omega in linspace(w_lo, w_hi, params.samples_omega) {
            let clearance = arc_clearance(pose, v, omega, &obstacles, params.clearance_cap);
            let stopping = v * v / (2.0 * limits.a_max);
            if clearance < stopping {
                continue;
            }
            let theta_end = robot.pose.theta + omega * params.horizon;
            let heading = PI - wrap_angle(theta_end - goal_angle).abs();
            admissible.push(WindowSample {
                v,
                omega,
                heading,
                clearance,
            });
        }
    }

    if admissible.is_empty() {
        return ((robot.v - limits.a_max * dt).max(0.0), 0.0);
    }

    let (mut h_min, mut h_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut c_min, mut c_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut v_min, mut v_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &admissible {
        h_min = h_min.min(s.heading);
        h_max = h_max.max(s.heading);
        c_min = c_min.min(s.clearance);
        c_max = c_max.max(s.clearance);
        v_min = v_min.min(s.v);
        v_max = v_max.max(s.v);
    }
    let norm = |x: f64, lo: f64, hi: f64| {
        if hi - lo > 1e-12 {
            (x - lo) / (hi - lo)
        } else {
            0.0
        }
    };

    let mut best: Option<(f64, f64, f64)> = None; // (score, v, omega)
    for s in &admissible {
        let score = params.weight_heading * norm(s.heading, h_min, h_max)
            + params.weight_clearance * norm(s.clearance, c_min, c_max)
            + params.weight_velocity * norm(s.v, v_min, v_max);
        let better = match best {
            None => true,
            Some((bs, bv, bw)) => {
                score > bs
                    || (score == bs
                        && (s.omega.abs() < bw.abs()
                            || (s.omega.abs() == bw.abs() && s.v < bv)))
            }
        };
        if better {
            best = Some((score, s.v, s.omega));
        }
    }
    let (_, v, omega) = best.unwrap();
    (v, omega)
}
