//! Suite-level aggregation into radar tables, collision rates, histograms,
//! and the CSV/JSON report files.

use crate::metrics::{
    collision_rates, CollisionEvent, MetricsConfig, PathEfficiency, PathStats,
};
use crate::nav::ControllerKind;
use crate::scenario::{FlowKind, RunStatus};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Everything measured from one run; `scenario_id` is "solo" for the paired
/// empty-corridor reference runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub scenario_id: String,
    pub controller: ControllerKind,
    pub flow: Option<FlowKind>,
    pub agents: u32,
    pub crowd_config: String,
    pub seed: u64,
    pub status: RunStatus,
    pub no_neighbors: bool,
    pub stats: PathStats,
    pub efficiency: Option<PathEfficiency>,
    pub nbr_vel: f64,
    pub nbr_reac: f64,
    pub prox: f64,
    pub colliding: f64,
    pub events: Vec<CollisionEvent>,
}

impl RunRow {
    pub fn is_solo(&self) -> bool {
        self.scenario_id == "solo"
    }

    pub fn timed_out(&self) -> bool {
        self.status == RunStatus::TimedOut
    }

    /// The seven benchmark metrics in report column order.
    pub fn metric_vector(&self) -> Option<[f64; 7]> {
        let eff = self.efficiency?;
        Some([
            eff.time_ratio,
            eff.length_ratio,
            eff.smoothness_ratio,
            self.nbr_vel,
            self.nbr_reac,
            self.prox,
            self.colliding,
        ])
    }
}

pub const METRIC_NAMES: [&str; 7] = [
    "time_ratio",
    "length_ratio",
    "smoothness_ratio",
    "nbr_vel",
    "nbr_reac",
    "prox",
    "colliding",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarRow {
    pub group: String,
    pub controller: ControllerKind,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerRates {
    pub controller: ControllerKind,
    pub onsets: u64,
    pub total_time: f64,
    pub energy_sum: f64,
    pub f_c: f64,
    pub q: f64,
    /// bin index -> count; bin width in the metrics config.
    pub histogram: BTreeMap<u32, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoloSummary {
    pub controller: ControllerKind,
    pub stats: PathStats,
}

/// Header recorded with every report so results stay interpretable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub master_seed: u64,
    pub crowd_configs: Vec<String>,
    pub controllers: Vec<ControllerKind>,
    pub dt: f64,
    pub scenario_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub meta: ReportMeta,
    pub solo: Vec<SoloSummary>,
    pub radar: Vec<RadarRow>,
    pub rates: Vec<ControllerRates>,
    /// Expected scenario x controller cells that produced no row.
    pub missing: Vec<String>,
    /// Cells whose crowd run hit the time limit.
    pub timed_out: Vec<String>,
    /// Cells flagged because no agent ever came within neighbor range.
    pub no_neighbor_cells: Vec<String>,
}

fn mean_and_population_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Build the aggregate report over per-run rows.
///
/// Radar values are clamped into [0, radar_clamp] before averaging; the raw
/// values stay in the per-scenario table. Missing cells are listed, never
/// silently dropped.
pub fn aggregate(
    rows: &[RunRow],
    expected: &[(String, ControllerKind)],
    meta: ReportMeta,
    config: &MetricsConfig,
) -> BenchmarkReport {
    let crowd_rows: Vec<&RunRow> = rows.iter().filter(|r| !r.is_solo()).collect();

    let mut missing = Vec::new();
    for (id, controller) in expected {
        let present = crowd_rows
            .iter()
            .any(|r| &r.scenario_id == id && r.controller == *controller);
        if !present {
            missing.push(format!("{}:{}", controller, id));
        }
    }

    let mut radar = Vec::new();
    for &controller in &meta.controllers {
        for (group, filter) in [
            ("all", None::<u32>),
            ("low_density", Some(DensityGroup::LOW_DENSITY_COUNT)),
        ] {
            for (m, name) in METRIC_NAMES.iter().enumerate() {
                let values: Vec<f64> = crowd_rows
                    .iter()
                    .filter(|r| r.controller == controller)
                    .filter(|r| filter.map_or(true, |count| r.agents == count))
                    .filter_map(|r| r.metric_vector())
                    .map(|v| v[m].clamp(0.0, config.radar_clamp))
                    .collect();
                let (mean, std) = mean_and_population_std(&values);
                radar.push(RadarRow {
                    group: group.to_string(),
                    controller,
                    metric: name.to_string(),
                    mean,
                    std,
                });
            }
        }
    }

    let mut rates = Vec::new();
    for &controller in &meta.controllers {
        let mut events: Vec<CollisionEvent> = Vec::new();
        let mut total_time = 0.0;
        for row in crowd_rows.iter().filter(|r| r.controller == controller) {
            events.extend(row.events.iter().copied());
            total_time += row.stats.duration;
        }
        let computed = if total_time > 0.0 {
            collision_rates(&events, total_time, config)
        } else {
            crate::metrics::CollisionRates {
                f_c: 0.0,
                q: 0.0,
                histogram: BTreeMap::new(),
            }
        };
        rates.push(ControllerRates {
            controller,
            onsets: events.len() as u64,
            total_time,
            energy_sum: events.iter().map(|e| e.delta_e).sum(),
            f_c: computed.f_c,
            q: computed.q,
            histogram: computed.histogram,
        });
    }

    let solo = rows
        .iter()
        .filter(|r| r.is_solo())
        .map(|r| SoloSummary {
            controller: r.controller,
            stats: r.stats,
        })
        .collect();

    let timed_out = crowd_rows
        .iter()
        .filter(|r| r.timed_out())
        .map(|r| format!("{}:{}", r.controller, r.scenario_id))
        .collect();
    let no_neighbor_cells = crowd_rows
        .iter()
        .filter(|r| r.no_neighbors)
        .map(|r| format!("{}:{}", r.controller, r.scenario_id))
        .collect();

    BenchmarkReport {
        meta,
        solo,
        radar,
        rates,
        missing,
        timed_out,
        no_neighbor_cells,
    }
}

struct DensityGroup;

impl DensityGroup {
    const LOW_DENSITY_COUNT: u32 = 50;
}

fn status_str(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Running => "running",
        RunStatus::GoalReached => "goal_reached",
        RunStatus::TimedOut => "timed_out",
    }
}

/// Per-scenario CSV; one row per crowd run, sorted by controller then id.
/// Column order is fixed (see README).
pub fn per_scenario_csv(rows: &[RunRow]) -> String {
    let mut sorted: Vec<&RunRow> = rows.iter().filter(|r| !r.is_solo()).collect();
    sorted.sort_by(|a, b| {
        a.controller
            .cmp(&b.controller)
            .then_with(|| a.scenario_id.cmp(&b.scenario_id))
    });
    let mut out = String::from(
        "scenario_id,controller,flow,agents,crowd_config,seed,status,no_neighbors,\
         duration_s,path_length_m,smoothness,time_ratio,length_ratio,smoothness_ratio,\
         nbr_vel,nbr_reac,prox,colliding,onsets,energy_j\n",
    );
    for row in sorted {
        let eff = row.efficiency.unwrap_or(PathEfficiency {
            time_ratio: f64::NAN,
            length_ratio: f64::NAN,
            smoothness_ratio: f64::NAN,
            timed_out: false,
        });
        let energy: f64 = row.events.iter().map(|e| e.delta_e).sum();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.scenario_id,
            row.controller,
            row.flow.map(|f| f.token()).unwrap_or(""),
            row.agents,
            row.crowd_config,
            row.seed,
            status_str(row.status),
            row.no_neighbors,
            row.stats.duration,
            row.stats.length,
            row.stats.smoothness,
            eff.time_ratio,
            eff.length_ratio,
            eff.smoothness_ratio,
            row.nbr_vel,
            row.nbr_reac,
            row.prox,
            row.colliding,
            row.events.len(),
            energy,
        );
    }
    out
}

/// Radar CSV: group,controller,metric,mean,std.
pub fn radar_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("group,controller,metric,mean,std\n");
    for row in &report.radar {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.group, row.controller, row.metric, row.mean, row.std
        );
    }
    out
}

/// Histogram CSV: controller,bin_low_j,bin_high_j,count. Only non-empty
/// bins appear; the binning is open-ended upward.
pub fn histogram_csv(report: &BenchmarkReport, config: &MetricsConfig) -> String {
    let mut out = String::from("controller,bin_low_j,bin_high_j,count\n");
    for rates in &report.rates {
        for (&bin, &count) in &rates.histogram {
            let low = bin as f64 * config.energy_bin_width;
            let high = (bin + 1) as f64 * config.energy_bin_width;
            let _ = writeln!(out, "{},{},{},{}", rates.controller, low, high, count);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(
        id: &str,
        controller: ControllerKind,
        agents: u32,
        colliding: f64,
    ) -> RunRow {
        RunRow {
            scenario_id: id.to_string(),
            controller,
            flow: Some(FlowKind::OneDPlus),
            agents,
            crowd_config: "sf_re".to_string(),
            seed: 1,
            status: RunStatus::GoalReached,
            no_neighbors: false,
            stats: PathStats {
                duration: 40.0,
                length: 40.0,
                smoothness: 1.0,
            },
            efficiency: Some(PathEfficiency {
                time_ratio: 1.0,
                length_ratio: 1.0,
                smoothness_ratio: 1.0,
                timed_out: false,
            }),
            nbr_vel: 1.0,
            nbr_reac: 1.0,
            prox: 0.2,
            colliding,
            events: vec![],
        }
    }

    fn meta() -> ReportMeta {
        ReportMeta {
            master_seed: 1,
            crowd_configs: vec!["sf_re".into()],
            controllers: vec![ControllerKind::Baseline],
            dt: 0.05,
            scenario_count: 2,
        }
    }

    #[test]
    fn identical_vectors_have_zero_std() {
        let rows = vec![
            row("a", ControllerKind::Baseline, 50, 1.0),
            row("b", ControllerKind::Baseline, 50, 1.0),
        ];
        let report = aggregate(&rows, &[], meta(), &MetricsConfig::default());
        for radar in &report.radar {
            assert_eq!(radar.std, 0.0, "{:?}", radar);
        }
    }

    #[test]
    fn mean_and_std_fixture() {
        let rows = vec![
            row("a", ControllerKind::Baseline, 50, 1.0),
            row("b", ControllerKind::Baseline, 50, 0.8),
        ];
        let report = aggregate(&rows, &[], meta(), &MetricsConfig::default());
        let colliding = report
            .radar
            .iter()
            .find(|r| r.group == "all" && r.metric == "colliding")
            .unwrap();
        assert!((colliding.mean - 0.9).abs() < 1e-12);
        assert!((colliding.std - 0.1).abs() < 1e-12);
    }

    #[test]
    fn aggregate_matches_one_pass_oracle() {
        let values: Vec<f64> = (0..25).map(|k| 0.5 + 0.02 * k as f64).collect();
        let rows: Vec<RunRow> = values
            .iter()
            .enumerate()
            .map(|(i, &c)| row(&format!("s{i}"), ControllerKind::Baseline, 50, c))
            .collect();
        let report = aggregate(&rows, &[], meta(), &MetricsConfig::default());
        let got = report
            .radar
            .iter()
            .find(|r| r.group == "all" && r.metric == "colliding")
            .unwrap();

        // One-pass accumulation as an independent route.
        let n = values.len() as f64;
        let (sum, sum_sq) = values
            .iter()
            .fold((0.0, 0.0), |(s, q), v| (s + v, q + v * v));
        let mean = sum / n;
        let std = (sum_sq / n - mean * mean).max(0.0).sqrt();
        assert!((got.mean - mean).abs() < 1e-12);
        assert!((got.std - std).abs() < 1e-12);
    }

    #[test]
    fn missing_cells_are_flagged() {
        let rows = vec![row("a", ControllerKind::Baseline, 50, 1.0)];
        let expected = vec![
            ("a".to_string(), ControllerKind::Baseline),
            ("b".to_string(), ControllerKind::Baseline),
        ];
        let report = aggregate(&rows, &expected, meta(), &MetricsConfig::default());
        assert_eq!(report.missing, vec!["baseline:b".to_string()]);
    }
}
