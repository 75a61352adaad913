//! Per-step run records and their line-delimited JSON encoding.
//!
//! The stream is one JSON object per line; floats use the shortest decimal
//! that round-trips, so replaying a stream reproduces every metric exactly.

use crate::error::SimError;
use crate::math::Vec2;
use crate::world::{AgentState, Contact, RobotState};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSample {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSample {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl AgentSample {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactSample {
    pub id: u32,
    pub depth: f64,
    pub v_rel: f64,
    pub onset: bool,
}

/// Optional LiDAR data attached to a step when the sensor is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LidarSample {
    pub ranges: Vec<f64>,
    pub mask: Vec<Option<u32>>,
}

/// Snapshot of the whole simulation at the end of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub robot: RobotSample,
    pub agents: Vec<AgentSample>,
    pub contacts: Vec<ContactSample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lidar: Option<LidarSample>,
}

impl StepRecord {
    pub fn capture(
        t: f64,
        robot: &RobotState,
        agents: &[AgentState],
        contacts: &[Contact],
    ) -> Self {
        StepRecord {
            t,
            robot: RobotSample {
                x: robot.pose.x,
                y: robot.pose.y,
                theta: robot.pose.theta,
                v: robot.v,
                w: robot.omega,
            },
            agents: agents
                .iter()
                .map(|a| AgentSample {
                    id: a.id,
                    x: a.position.x,
                    y: a.position.y,
                    vx: a.velocity.x,
                    vy: a.velocity.y,
                })
                .collect(),
            contacts: contacts
                .iter()
                .map(|c| ContactSample {
                    id: c.agent_id,
                    depth: c.depth,
                    v_rel: c.v_rel,
                    onset: c.onset,
                })
                .collect(),
            lidar: None,
        }
    }

    pub fn robot_position(&self) -> Vec2 {
        Vec2::new(self.robot.x, self.robot.y)
    }
}

/// Serialize records as line-delimited JSON.
pub fn write_jsonl<W: Write>(mut out: W, records: &[StepRecord]) -> Result<(), SimError> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Parse a line-delimited JSON record stream.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<StepRecord>, SimError> {
    let mut records = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip_is_exact() {
        let rec = StepRecord {
            t: 0.05,
            robot: RobotSample {
                x: 1.0125,
                y: 5.0,
                theta: 0.1 + 0.2, // deliberately non-representable
                v: 0.25,
                w: -0.7853981633974483,
            },
            agents: vec![AgentSample {
                id: 3,
                x: 49.999999999999,
                y: 0.30000000000000004,
                vx: -1.4,
                vy: 1e-17,
            }],
            contacts: vec![ContactSample {
                id: 3,
                depth: 0.001234567890123,
                v_rel: 2.4,
                onset: true,
            }],
            lidar: None,
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], rec);
    }

    #[test]
    fn field_names_match_wire_format() {
        let rec = StepRecord {
            t: 0.0,
            robot: RobotSample {
                x: 0.0,
                y: 0.0,
                theta: 0.0,
                v: 0.0,
                w: 0.0,
            },
            agents: vec![],
            contacts: vec![],
            lidar: None,
        };
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"t":0.0,"robot":{"x":0.0,"y":0.0,"theta":0.0,"v":0.0,"w":0.0},"agents":[],"contacts":[]}"#
        );
    }
}
