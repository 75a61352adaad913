//! Optimal reciprocal collision avoidance: one half-plane constraint per
//! neighbor in velocity space, then the closest feasible velocity to the
//! preferred one via incremental linear programming. Falls back to the
//! least-violating velocity when the constraints are mutually infeasible.

use crate::crowd::rvo::NeighborBody;
use crate::math::Vec2;

const LP_EPSILON: f64 = 1e-10;

/// Boundary of a feasible half-plane in velocity space. Velocities on the
/// left of `direction` (seen from `point`) satisfy the constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrcaLine {
    pub point: Vec2,
    pub direction: Vec2,
}

impl OrcaLine {
    /// Signed violation of the constraint by `v`; <= 0 means satisfied.
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.cross(self.point - v)
    }
}

/// Half-plane constraint induced by one neighbor.
///
/// `u` is the smallest change pushing the relative velocity out of the
/// velocity obstacle truncated at `horizon`; the boundary passes through the
/// current velocity plus half of `u`, assuming the neighbor takes the other
/// half. Pairs already in contact resolve within `time_step` instead.
pub fn orca_line(
    own_velocity: Vec2,
    neighbor: &NeighborBody,
    horizon: f64,
    time_step: f64,
) -> OrcaLine {
    let rel_pos = neighbor.rel_position;
    let rel_vel = own_velocity - neighbor.velocity;
    let dist_sq = rel_pos.length_squared();
    let combined = neighbor.combined_radius;
    let combined_sq = combined * combined;

    let direction;
    let u;

    if dist_sq > combined_sq {
        // No current collision: project onto the truncated cone.
        let w = rel_vel - rel_pos * (1.0 / horizon);
        let w_len_sq = w.length_squared();
        let dot1 = w.dot(rel_pos);

        if dot1 < 0.0 && dot1 * dot1 > combined_sq * w_len_sq {
            // Project on the cut-off circle.
            let w_len = w_len_sq.sqrt();
            let unit_w = if w_len > 1e-300 {
                w * (1.0 / w_len)
            } else {
                -rel_pos.normalized_or_zero()
            };
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (combined / horizon - w_len);
        } else {
            // Project on the nearer leg; exact head-on ties take the right
            // leg, a handedness rule that is preserved under point
            // reflection so mirrored pairs stay mirrored.
            let leg = (dist_sq - combined_sq).sqrt();
            if rel_pos.cross(w) > 0.0 {
                direction = Vec2::new(
                    rel_pos.x * leg - rel_pos.y * combined,
                    rel_pos.x * combined + rel_pos.y * leg,
                ) * (1.0 / dist_sq);
            } else {
                direction = -(Vec2::new(
                    rel_pos.x * leg + rel_pos.y * combined,
                    -rel_pos.x * combined + rel_pos.y * leg,
                ) * (1.0 / dist_sq));
            }
            let dot2 = rel_vel.dot(direction);
            u = direction * dot2 - rel_vel;
        }
    } else {
        // Already colliding: push apart within one time step.
        let inv_step = 1.0 / time_step;
        let w = rel_vel - rel_pos * inv_step;
        let w_len = w.length();
        let unit_w = if w_len > 1e-300 {
            w * (1.0 / w_len)
        } else if dist_sq > 1e-300 {
            -rel_pos.normalized_or_zero()
        } else {
            Vec2::new(1.0, 0.0)
        };
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (combined * inv_step - w_len);
    }

    OrcaLine {
        point: own_velocity + u * 0.5,
        direction,
    }
}

/// Optimize along the boundary of constraint `line_no`, subject to the lines
/// before it and the speed disc. Returns false when that segment is empty.
fn linear_program1(
    lines: &[OrcaLine],
    line_no: usize,
    radius: f64,
    opt_velocity: Vec2,
    direction_opt: bool,
    result: &mut Vec2,
) -> bool {
    let line = lines[line_no];
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        return false;
    }
    let sqrt_disc = discriminant.sqrt();
    let mut t_left = -dot - sqrt_disc;
    let mut t_right = -dot + sqrt_disc;

    for prev in &lines[..line_no] {
        let denominator = line.direction.cross(prev.direction);
        let numerator = prev.direction.cross(line.point - prev.point);
        if denominator.abs() <= LP_EPSILON {
            if numerator < 0.0 {
                return false;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return false;
        }
    }

    if direction_opt {
        if opt_velocity.dot(line.direction) > 0.0 {
            *result = line.point + line.direction * t_right;
        } else {
            *result = line.point + line.direction * t_left;
        }
    } else {
        let t = line.direction.dot(opt_velocity - line.point);
        *result = line.point + line.direction * t.clamp(t_left, t_right);
    }
    true
}

/// Incremental 2D LP over the lines; returns the index of the first failing
/// line, or `lines.len()` when every constraint is satisfiable.
fn linear_program2(
    lines: &[OrcaLine],
    radius: f64,
    opt_velocity: Vec2,
    direction_opt: bool,
    result: &mut Vec2,
) -> usize {
    *result = if direction_opt {
        // opt_velocity is a unit direction in this mode.
        opt_velocity * radius
    } else if opt_velocity.length_squared() > radius * radius {
        opt_velocity.normalized_or_zero() * radius
    } else {
        opt_velocity
    };

    for i in 0..lines.len() {
        if lines[i].violation(*result) > 0.0 {
            let temp = *result;
            if !linear_program1(lines, i, radius, opt_velocity, direction_opt, result) {
                *result = temp;
                return i;
            }
        }
    }
    lines.len()
}

/// Infeasible fall-back: minimize the largest violation by pushing the
/// failed constraints back at equal speed (the 3D-lifted program projected
/// to the plane).
fn linear_program3(lines: &[OrcaLine], begin_line: usize, radius: f64, result: &mut Vec2) {
    let mut distance = 0.0;
    for i in begin_line..lines.len() {
        if lines[i].violation(*result) > distance {
            let mut proj_lines: Vec<OrcaLine> = Vec::with_capacity(i);
            for j in 0..i {
                let determinant = lines[i].direction.cross(lines[j].direction);
                let point;
                if determinant.abs() <= LP_EPSILON {
                    if lines[i].direction.dot(lines[j].direction) > 0.0 {
                        continue;
                    }
                    point = (lines[i].point + lines[j].point) * 0.5;
                } else {
                    point = lines[i].point
                        + lines[i].direction
                            * (lines[j].direction.cross(lines[i].point - lines[j].point)
                                / determinant);
                }
                let direction = (lines[j].direction - lines[i].direction).normalized_or_zero();
                proj_lines.push(OrcaLine { point, direction });
            }
            let temp = *result;
            if linear_program2(
                &proj_lines,
                radius,
                Vec2::new(-lines[i].direction.y, lines[i].direction.x),
                true,
                result,
            ) < proj_lines.len()
            {
                *result = temp;
            }
            distance = lines[i].violation(*result);
        }
    }
}

/// New velocity for an agent: closest to `v_pref` within the speed disc and
/// all neighbor half-planes, or the least-violating velocity if infeasible.
pub fn orca_velocity(
    own_velocity: Vec2,
    neighbors: &[NeighborBody],
    horizon: f64,
    time_step: f64,
    v_pref: Vec2,
    max_speed: f64,
) -> Vec2 {
    let lines: Vec<OrcaLine> = neighbors
        .iter()
        .map(|n| orca_line(own_velocity, n, horizon, time_step))
        .collect();
    let mut result = Vec2::ZERO;
    let fail = linear_program2(&lines, max_speed, v_pref, false, &mut result);
    if fail < lines.len() {
        linear_program3(&lines, fail, max_speed, &mut result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_neighbors_returns_preferred() {
        let v = orca_velocity(
            Vec2::new(0.2, 0.0),
            &[],
            1.5,
            0.05,
            Vec2::new(1.0, 0.3),
            1.4,
        );
        assert_eq!(v, Vec2::new(1.0, 0.3));
    }

    #[test]
    fn preferred_above_max_speed_is_scaled() {
        let v = orca_velocity(Vec2::ZERO, &[], 1.5, 0.05, Vec2::new(3.0, 0.0), 1.4);
        assert!((v.length() - 1.4).abs() < 1e-12);
        assert!(v.y.abs() < 1e-12);
    }

    #[test]
    fn static_neighbor_dead_ahead_deflects() {
        let own_vel = Vec2::new(1.4, 0.0);
        let v_pref = Vec2::new(1.4, 0.0);
        let neighbor = NeighborBody {
            rel_position: Vec2::new(1.0, 0.0),
            velocity: Vec2::ZERO,
            combined_radius: 0.6,
        };
        let v = orca_velocity(own_vel, &[neighbor], 1.5, 0.05, v_pref, 1.4);
        assert!(v.y.abs() > 1e-6, "expected lateral component, got {:?}", v);
        assert!(v.x < 1.4);
        // Direct substitution into the half-plane inequality.
        let line = orca_line(own_vel, &neighbor, 1.5, 0.05);
        assert!(line.violation(v) <= 1e-9);
    }

    #[test]
    fn antipodal_pair_is_point_symmetric() {
        // Agent A at the origin moving +x; agent B is its point reflection.
        let vel_a = Vec2::new(1.4, 0.0);
        let vel_b = -vel_a;
        let n_for_a = NeighborBody {
            rel_position: Vec2::new(4.0, 0.0),
            velocity: vel_b,
            combined_radius: 0.6,
        };
        let n_for_b = NeighborBody {
            rel_position: Vec2::new(-4.0, 0.0),
            velocity: vel_a,
            combined_radius: 0.6,
        };
        let out_a = orca_velocity(vel_a, &[n_for_a], 1.5, 0.05, vel_a, 1.4);
        let out_b = orca_velocity(vel_b, &[n_for_b], 1.5, 0.05, vel_b, 1.4);
        assert_eq!(out_a, -out_b);
    }

    #[test]
    fn constraints_satisfied_when_feasible() {
        let own_vel = Vec2::new(1.0, 0.2);
        let v_pref = Vec2::new(1.2, 0.0);
        let neighbors = [
            NeighborBody {
                rel_position: Vec2::new(2.0, 0.5),
                velocity: Vec2::new(-1.0, 0.0),
                combined_radius: 0.6,
            },
            NeighborBody {
                rel_position: Vec2::new(1.5, -1.0),
                velocity: Vec2::new(0.0, 0.9),
                combined_radius: 0.6,
            },
        ];
        let v = orca_velocity(own_vel, &neighbors, 1.5, 0.05, v_pref, 1.4);
        for n in &neighbors {
            let line = orca_line(own_vel, n, 1.5, 0.05);
            assert!(line.violation(v) <= 1e-9, "violated: {:?}", line);
        }
        assert!(v.length() <= 1.4 + 1e-12);
    }
}
