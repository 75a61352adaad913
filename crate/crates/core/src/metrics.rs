//! Benchmark scoring: path efficiency, crowd-flow disturbance, proximity,
//! contact time, and impact-energy assessment, plus suite-level aggregation.
//!
//! All metrics are pure functions of recorded step streams, so scores
//! computed from serialized records match in-process results exactly.

use crate::math::wrap_angle;
use crate::record::StepRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tunables and physical constants of the metric layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Proximity normalization range R (m).
    pub prox_range: f64,
    /// Robot neighborhood radius for the flow metrics (m).
    pub neighbor_range: f64,
    /// Weight of angular speed variation in the smoothness sum (m/rad).
    pub angular_weight: f64,
    /// Floor for the neighbor angular-speed denominator (rad/s).
    pub omega_floor: f64,
    /// Clamp for the reaction ratio.
    pub nbr_reac_max: f64,
    /// Floor applied to both smoothness values before their ratio.
    pub smoothness_floor: f64,
    /// Floor for time and length ratio denominators.
    pub ratio_floor: f64,
    /// Agents slower than this have no defined heading (m/s).
    pub heading_speed_floor: f64,
    /// Ascending boundaries between body segments (m above floor).
    pub segment_boundaries: [f64; 3],
    pub reflected_masses: ReflectedMassTable,
    /// Impact-energy histogram bin width (J).
    pub energy_bin_width: f64,
    /// Chart values are clamped into [0, this] while raw values stay in the
    /// per-scenario table.
    pub radar_clamp: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            prox_range: 5.0,
            neighbor_range: 1.0,
            angular_weight: 1.0,
            omega_floor: 1e-3,
            nbr_reac_max: 5.0,
            smoothness_floor: 1e-3,
            ratio_floor: 1e-9,
            heading_speed_floor: 1e-6,
            segment_boundaries: [0.15, 0.55, 0.95],
            reflected_masses: ReflectedMassTable::default(),
            energy_bin_width: 0.5,
            radar_clamp: 1.5,
        }
    }
}

/// Human body segment struck in a collision, bottom up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodySegment {
    Feet,
    LowerLegs,
    UpperLegs,
    UpperBody,
}

/// Effective inertia of each segment as seen by an impact (kg).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflectedMassTable {
    pub feet: f64,
    pub lower_legs: f64,
    pub upper_legs: f64,
    pub upper_body: f64,
}

impl Default for ReflectedMassTable {
    fn default() -> Self {
        ReflectedMassTable {
            feet: 4.0,
            lower_legs: 13.0,
            upper_legs: 24.0,
            upper_body: 40.0,
        }
    }
}

pub fn reflected_mass(segment: BodySegment, table: &ReflectedMassTable) -> f64 {
    match segment {
        BodySegment::Feet => table.feet,
        BodySegment::LowerLegs => table.lower_legs,
        BodySegment::UpperLegs => table.upper_legs,
        BodySegment::UpperBody => table.upper_body,
    }
}

/// Segment with the largest vertical overlap with the robot body band
/// [0, top_height]; ties go to the lower segment.
pub fn segment_for_contact(top_height: f64, boundaries: &[f64; 3]) -> BodySegment {
    let [b0, b1, b2] = *boundaries;
    let spans = [
        (BodySegment::Feet, top_height.min(b0)),
        (BodySegment::LowerLegs, (top_height.min(b1) - b0).max(0.0)),
        (BodySegment::UpperLegs, (top_height.min(b2) - b1).max(0.0)),
        (BodySegment::UpperBody, (top_height - b2).max(0.0)),
    ];
    let mut best = spans[0];
    for s in &spans[1..] {
        if s.1 > best.1 {
            best = *s;
        }
    }
    best.0
}

/// Kinetic energy absorbed by an impact at relative closing speed `v_rel`:
/// half the reduced mass times the squared speed.
pub fn impact_energy(m_ref: f64, m_rob: f64, v_rel: f64) -> f64 {
    let mu = 1.0 / (1.0 / m_ref + 1.0 / m_rob);
    0.5 * mu * v_rel * v_rel
}

/// One collision onset with its severity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: f64,
    pub agent_id: u32,
    pub segment: BodySegment,
    pub m_ref: f64,
    pub v_rel: f64,
    pub delta_e: f64,
}

/// Collect one event per contact onset in the record stream.
pub fn extract_events(
    records: &[StepRecord],
    robot_top_height: f64,
    robot_mass: f64,
    config: &MetricsConfig,
) -> Vec<CollisionEvent> {
    let segment = segment_for_contact(robot_top_height, &config.segment_boundaries);
    let m_ref = reflected_mass(segment, &config.reflected_masses);
    let mut events = Vec::new();
    for record in records {
        for contact in &record.contacts {
            if contact.onset {
                events.push(CollisionEvent {
                    t: record.t,
                    agent_id: contact.id,
                    segment,
                    m_ref,
                    v_rel: contact.v_rel,
                    delta_e: impact_energy(m_ref, robot_mass, contact.v_rel),
                });
            }
        }
    }
    events
}

/// Raw path descriptors of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    /// Elapsed time to termination (s).
    pub duration: f64,
    /// Total traveled distance (m).
    pub length: f64,
    /// Total variation of linear plus weighted angular speed.
    pub smoothness: f64,
}

pub fn path_stats(records: &[StepRecord], config: &MetricsConfig) -> PathStats {
    let duration = records.last().map(|r| r.t).unwrap_or(0.0);
    let mut length = 0.0;
    let mut smoothness = 0.0;
    for pair in records.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        length += (next.robot_position() - prev.robot_position()).length();
        smoothness += (next.robot.v - prev.robot.v).abs()
            + config.angular_weight * (next.robot.w - prev.robot.w).abs();
    }
    PathStats {
        duration,
        length,
        smoothness,
    }
}

/// Solo-to-crowd ratios; 1 means the crowd cost nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEfficiency {
    pub time_ratio: f64,
    pub length_ratio: f64,
    pub smoothness_ratio: f64,
    pub timed_out: bool,
}

pub fn path_efficiency(
    solo: &PathStats,
    crowd: &PathStats,
    timed_out: bool,
    config: &MetricsConfig,
) -> PathEfficiency {
    PathEfficiency {
        time_ratio: solo.duration / crowd.duration.max(config.ratio_floor),
        length_ratio: solo.length / crowd.length.max(config.ratio_floor),
        smoothness_ratio: solo.smoothness.max(config.smoothness_floor)
            / crowd.smoothness.max(config.smoothness_floor),
        timed_out,
    }
}

/// Disturbance of the crowd flow near the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowEffect {
    /// Mean speed of robot neighbors over mean crowd speed.
    pub nbr_vel: f64,
    /// Mean crowd turn rate over mean neighbor turn rate.
    pub nbr_reac: f64,
    /// True when no step ever had an agent within range.
    pub no_neighbors: bool,
}

pub fn flow_effect(records: &[StepRecord], config: &MetricsConfig) -> FlowEffect {
    if records.len() < 2 || records[0].agents.is_empty() {
        return FlowEffect {
            nbr_vel: 1.0,
            nbr_reac: 1.0,
            no_neighbors: true,
        };
    }
    let range_sq = config.neighbor_range * config.neighbor_range;
    let mut all_speed_steps = 0.0;
    let mut all_speed_count = 0usize;
    let mut nbr_speed_steps = 0.0;
    let mut nbr_speed_count = 0usize;
    let mut all_omega_steps = 0.0;
    let mut all_omega_count = 0usize;
    let mut nbr_omega_steps = 0.0;
    let mut nbr_omega_count = 0usize;

    for pair in records.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let dt = cur.t - prev.t;
        if dt <= 0.0 {
            continue;
        }
        let robot = cur.robot_position();
        let mut speed_sum = 0.0;
        let mut nbr_sum = 0.0;
        let mut nbr_n = 0usize;
        let mut omega_sum = 0.0;
        let mut omega_n = 0usize;
        let mut nbr_omega_sum = 0.0;
        let mut nbr_omega_n = 0usize;
        for (a_prev, a_cur) in prev.agents.iter().zip(&cur.agents) {
            debug_assert_eq!(a_prev.id, a_cur.id);
            let speed = a_cur.velocity().length();
            speed_sum += speed;
            let is_neighbor = (a_cur.position() - robot).length_squared() <= range_sq;
            if is_neighbor {
                nbr_sum += speed;
                nbr_n += 1;
            }
            let prev_speed = a_prev.velocity().length();
            if speed > config.heading_speed_floor && prev_speed > config.heading_speed_floor {
                let h_cur = a_cur.vy.atan2(a_cur.vx);
                let h_prev = a_prev.vy.atan2(a_prev.vx);
                let rate = wrap_angle(h_cur - h_prev).abs() / dt;
                omega_sum += rate;
                omega_n += 1;
                if is_neighbor {
                    nbr_omega_sum += rate;
                    nbr_omega_n += 1;
                }
            }
        }
        all_speed_steps += speed_sum / cur.agents.len() as f64;
        all_speed_count += 1;
        if nbr_n > 0 {
            nbr_speed_steps += nbr_sum / nbr_n as f64;
            nbr_speed_count += 1;
        }
        if omega_n > 0 {
            all_omega_steps += omega_sum / omega_n as f64;
            all_omega_count += 1;
        }
        if nbr_omega_n > 0 {
            nbr_omega_steps += nbr_omega_sum / nbr_omega_n as f64;
            nbr_omega_count += 1;
        }
    }

    if nbr_speed_count == 0 {
        return FlowEffect {
            nbr_vel: 1.0,
            nbr_reac: 1.0,
            no_neighbors: true,
        };
    }
    let v_all = all_speed_steps / all_speed_count.max(1) as f64;
    let v_nbr = nbr_speed_steps / nbr_speed_count as f64;
    let omega_all = if all_omega_count > 0 {
        all_omega_steps / all_omega_count as f64
    } else {
        0.0
    };
    let omega_nbr = if nbr_omega_count > 0 {
        nbr_omega_steps / nbr_omega_count as f64
    } else {
        0.0
    };
    FlowEffect {
        nbr_vel: v_nbr / v_all.max(config.ratio_floor),
        nbr_reac: (omega_all / omega_nbr.max(config.omega_floor)).clamp(0.0, config.nbr_reac_max),
        no_neighbors: false,
    }
}

/// Proximity score in [0, 1]: 1 when an agent stays on top of the robot,
/// 0 when the closest agent never comes within range.
pub fn proximity(records: &[StepRecord], config: &MetricsConfig) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let range = config.prox_range;
    let mut sum = 0.0;
    for record in records {
        let robot = record.robot_position();
        let d_min = record
            .agents
            .iter()
            .map(|a| (a.position() - robot).length())
            .fold(f64::INFINITY, f64::min)
            .clamp(0.0, range);
        sum += d_min / range;
    }
    1.0 - sum / records.len() as f64
}

/// Share of the run spent free of robot-agent contact, in [0, 1].
pub fn colliding_score(records: &[StepRecord]) -> f64 {
    let t_scenario = records.last().map(|r| r.t).unwrap_or(0.0);
    if t_scenario <= 0.0 {
        return 1.0;
    }
    let mut t_collision = 0.0;
    for pair in records.windows(2) {
        if !pair[1].contacts.is_empty() {
            t_collision += pair[1].t - pair[0].t;
        }
    }
    1.0 - t_collision / t_scenario
}

/// Suite-level collision rates for one controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionRates {
    /// Onsets per second of simulated time.
    pub f_c: f64,
    /// Absorbed energy per second of simulated time (J/s).
    pub q: f64,
    /// Sparse histogram: bin index -> onset count, bin width from config.
    pub histogram: BTreeMap<u32, u64>,
}

pub fn collision_rates(
    events: &[CollisionEvent],
    total_time: f64,
    config: &MetricsConfig,
) -> CollisionRates {
    let mut histogram = BTreeMap::new();
    let mut energy = 0.0;
    for event in events {
        energy += event.delta_e;
        let bin = (event.delta_e / config.energy_bin_width).floor() as u32;
        *histogram.entry(bin).or_insert(0) += 1;
    }
    CollisionRates {
        f_c: events.len() as f64 / total_time,
        q: energy / total_time,
        histogram,
    }
}
