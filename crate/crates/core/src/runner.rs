//! Batch execution: single scenario runs, paired solo runs, and the full
//! suite sweep with scenario-level parallelism.

use crate::error::SimError;
use crate::metrics::{
    colliding_score, extract_events, flow_effect, path_efficiency, path_stats, proximity,
    MetricsConfig, PathStats,
};
use crate::nav::{Controller, ControllerKind, GoalSpec};
use crate::record::{write_jsonl, StepRecord};
use crate::report::{
    aggregate, histogram_csv, per_scenario_csv, radar_csv, BenchmarkReport, ReportMeta, RunRow,
};
use crate::scenario::{derive_seed, termination_check, RunStatus, ScenarioSpec, SuiteManifest};
use crate::sim::{SimParams, Simulation};
use crate::world::WorldSpec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// Shared knobs for every run of a sweep.
#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub sim: SimParams,
    pub metrics: MetricsConfig,
}

/// How much per-run data is kept on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    Full,
    Metrics,
}

impl RecordMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(RecordMode::Full),
            "metrics" => Some(RecordMode::Metrics),
            _ => None,
        }
    }
}

/// A suite sweep to execute.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub controllers: Vec<ControllerKind>,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub record_mode: RecordMode,
    /// Keep only scenarios with these agent counts (None keeps all).
    pub densities: Option<Vec<u32>>,
    /// Keep only these flow tokens.
    pub flows: Option<Vec<String>>,
    /// Keep only these crowd config labels.
    pub configs: Option<Vec<String>>,
}

/// Records and termination state of a single run.
pub struct RunOutcome {
    pub records: Vec<StepRecord>,
    pub status: RunStatus,
}

/// Execute one scenario to goal or time limit.
pub fn run_scenario(
    spec: &ScenarioSpec,
    controller: Controller,
    config: &RunConfig,
) -> Result<RunOutcome, SimError> {
    let controller = match (&spec.controller, controller) {
        // A scenario-embedded controller block overrides parameters when the
        // requested kind matches.
        (Some(embedded), requested) if embedded.kind() == requested.kind() => embedded.clone(),
        (_, requested) => requested,
    };
    let mut params = config.sim;
    params.lidar = spec.lidar;
    let rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, controller.kind().name()));
    let mut sim = Simulation::new(
        spec.world,
        spec.goal,
        spec.crowd_config.clone(),
        controller,
        params,
        spec.agent_states(),
        rng,
    );
    let mut records = vec![sim.initial_record()];
    let max_steps = (spec.goal.time_limit / params.dt).ceil() as u64 + 2;
    loop {
        records.push(sim.step()?);
        let status = termination_check(sim.progress(), sim.clock.t, &spec.goal);
        if status != RunStatus::Running {
            return Ok(RunOutcome { records, status });
        }
        if sim.clock.step_index >= max_steps {
            return Ok(RunOutcome {
                records,
                status: RunStatus::TimedOut,
            });
        }
    }
}

/// Empty-corridor reference run for one controller.
pub fn run_solo(
    controller: ControllerKind,
    world: WorldSpec,
    goal: GoalSpec,
    config: &RunConfig,
) -> Result<RunOutcome, SimError> {
    let spec = ScenarioSpec {
        id: "solo".to_string(),
        world,
        flow: crate::scenario::FlowKind::OneDPlus,
        density: crate::scenario::DensityLevel {
            count: 0,
            per_m2: 0.0,
        },
        crowd_config: crate::crowd::CrowdModelConfig::social_forces("none", false),
        controller: None,
        seed: 0,
        agents: vec![],
        goal,
        lidar: None,
    };
    run_scenario(&spec, Controller::from_kind(controller), config)
}

fn crowd_row(
    spec: &ScenarioSpec,
    controller: ControllerKind,
    outcome: &RunOutcome,
    solo: &PathStats,
    config: &RunConfig,
) -> RunRow {
    let stats = path_stats(&outcome.records, &config.metrics);
    let efficiency = path_efficiency(
        solo,
        &stats,
        outcome.status == RunStatus::TimedOut,
        &config.metrics,
    );
    let flow = flow_effect(&outcome.records, &config.metrics);
    let events = extract_events(
        &outcome.records,
        config.sim.robot.top_height,
        config.sim.robot.mass,
        &config.metrics,
    );
    RunRow {
        scenario_id: spec.id.clone(),
        controller,
        flow: Some(spec.flow),
        agents: spec.density.count,
        crowd_config: spec.crowd_config.label.clone(),
        seed: spec.seed,
        status: outcome.status,
        no_neighbors: flow.no_neighbors,
        stats,
        efficiency: Some(efficiency),
        nbr_vel: flow.nbr_vel,
        nbr_reac: flow.nbr_reac,
        prox: proximity(&outcome.records, &config.metrics),
        colliding: colliding_score(&outcome.records),
        events,
    }
}

fn solo_row(controller: ControllerKind, outcome: &RunOutcome, config: &RunConfig) -> RunRow {
    RunRow {
        scenario_id: "solo".to_string(),
        controller,
        flow: None,
        agents: 0,
        crowd_config: String::new(),
        seed: 0,
        status: outcome.status,
        no_neighbors: true,
        stats: path_stats(&outcome.records, &config.metrics),
        efficiency: None,
        nbr_vel: 1.0,
        nbr_reac: 1.0,
        prox: proximity(&outcome.records, &config.metrics),
        colliding: colliding_score(&outcome.records),
        events: vec![],
    }
}

/// Result of a sweep: rows, the report, and any aborted cells.
pub struct SweepResult {
    pub rows: Vec<RunRow>,
    pub report: BenchmarkReport,
    pub failures: Vec<String>,
}

fn scenario_selected(spec: &ScenarioSpec, plan: &RunPlan) -> bool {
    if let Some(densities) = &plan.densities {
        if !densities.contains(&spec.density.count) {
            return false;
        }
    }
    if let Some(flows) = &plan.flows {
        if !flows.iter().any(|f| f == spec.flow.token()) {
            return false;
        }
    }
    if let Some(configs) = &plan.configs {
        if !configs.iter().any(|c| c == &spec.crowd_config.label) {
            return false;
        }
    }
    true
}

/// Run every selected scenario under every requested controller, in
/// parallel across runs. Output is independent of the parallelism degree.
pub fn run_sweep(
    scenarios: &[ScenarioSpec],
    manifest: &SuiteManifest,
    plan: &RunPlan,
    config: &RunConfig,
) -> Result<SweepResult, SimError> {
    let selected: Vec<&ScenarioSpec> = scenarios
        .iter()
        .filter(|s| scenario_selected(s, plan))
        .collect();
    let world = selected
        .first()
        .map(|s| s.world)
        .unwrap_or_else(WorldSpec::standard);
    let goal = selected.first().map(|s| s.goal).unwrap_or_default();

    let mut rows: Vec<RunRow> = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut solo_stats: Vec<(ControllerKind, PathStats)> = Vec::new();

    let records_dir = plan.out_dir.join("records");
    for &controller in &plan.controllers {
        let outcome = run_solo(controller, world, goal, config)?;
        let row = solo_row(controller, &outcome, config);
        solo_stats.push((controller, row.stats));
        if plan.record_mode == RecordMode::Full {
            write_records_file(&records_dir, controller, "solo", &outcome.records)?;
        }
        rows.push(row);
    }

    let tasks: Vec<(ControllerKind, &ScenarioSpec)> = plan
        .controllers
        .iter()
        .flat_map(|&c| selected.iter().map(move |&s| (c, s)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs.max(1))
        .build()
        .expect("thread pool");
    let results: Vec<Result<(RunRow, Option<Vec<StepRecord>>), (String, SimError)>> =
        pool.install(|| {
            use rayon::prelude::*;
            tasks
                .par_iter()
                .map(|&(controller, spec)| {
                    let solo = solo_stats
                        .iter()
                        .find(|(c, _)| *c == controller)
                        .map(|(_, s)| *s)
                        .expect("solo run exists for every controller");
                    match run_scenario(spec, Controller::from_kind(controller), config) {
                        Ok(outcome) => {
                            let row = crowd_row(spec, controller, &outcome, &solo, config);
                            let records = (plan.record_mode == RecordMode::Full)
                                .then_some(outcome.records);
                            Ok((row, records))
                        }
                        Err(err) => Err((format!("{}:{}", controller, spec.id), err)),
                    }
                })
                .collect()
        });

    for result in results {
        match result {
            Ok((row, records)) => {
                if let Some(records) = records {
                    write_records_file(&records_dir, row.controller, &row.scenario_id, &records)?;
                }
                rows.push(row);
            }
            Err((cell, err)) => failures.push(format!("{cell}: {err}")),
        }
    }

    rows.sort_by(|a, b| {
        a.controller
            .cmp(&b.controller)
            .then_with(|| a.scenario_id.cmp(&b.scenario_id))
    });

    let expected: Vec<(String, ControllerKind)> = plan
        .controllers
        .iter()
        .flat_map(|&c| selected.iter().map(move |s| (s.id.clone(), c)))
        .collect();
    let meta = ReportMeta {
        master_seed: manifest.master_seed,
        crowd_configs: manifest.crowd_configs.clone(),
        controllers: plan.controllers.clone(),
        dt: config.sim.dt,
        scenario_count: selected.len(),
    };
    let report = aggregate(&rows, &expected, meta, &config.metrics);

    write_outputs(plan, config, &rows, &report, &expected)?;

    Ok(SweepResult {
        rows,
        report,
        failures,
    })
}

fn write_records_file(
    dir: &Path,
    controller: ControllerKind,
    scenario_id: &str,
    records: &[StepRecord],
) -> Result<(), SimError> {
    let dir = dir.join(controller.name());
    fs::create_dir_all(&dir)?;
    let file = fs::File::create(dir.join(format!("{scenario_id}.jsonl")))?;
    write_jsonl(std::io::BufWriter::new(file), records)
}

/// Inputs needed to rebuild the report from stored rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredSweep {
    pub meta: ReportMeta,
    pub expected: Vec<(String, ControllerKind)>,
}

fn write_outputs(
    plan: &RunPlan,
    config: &RunConfig,
    rows: &[RunRow],
    report: &BenchmarkReport,
    expected: &[(String, ControllerKind)],
) -> Result<(), SimError> {
    let runs_dir = plan.out_dir.join("runs");
    fs::create_dir_all(&runs_dir)?;
    let mut jsonl = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut jsonl, row)?;
        jsonl.push(b'\n');
    }
    fs::write(runs_dir.join("metrics.jsonl"), jsonl)?;
    let stored = StoredSweep {
        meta: report.meta.clone(),
        expected: expected.to_vec(),
    };
    let mut manifest = serde_json::to_vec_pretty(&stored)?;
    manifest.push(b'\n');
    fs::write(runs_dir.join("sweep.json"), manifest)?;
    write_report_files(&plan.out_dir, rows, report, &config.metrics)
}

/// Write report.json plus the three CSV tables.
pub fn write_report_files(
    dir: &Path,
    rows: &[RunRow],
    report: &BenchmarkReport,
    metrics: &MetricsConfig,
) -> Result<(), SimError> {
    fs::create_dir_all(dir)?;
    let mut body = serde_json::to_vec_pretty(report)?;
    body.push(b'\n');
    fs::write(dir.join("report.json"), body)?;
    fs::write(dir.join("per_scenario.csv"), per_scenario_csv(rows))?;
    fs::write(dir.join("radar.csv"), radar_csv(report))?;
    fs::write(dir.join("histogram.csv"), histogram_csv(report, metrics))?;
    Ok(())
}

/// Rebuild the report files from rows stored by a previous sweep.
pub fn rebuild_report(dir: &Path, metrics: &MetricsConfig) -> Result<BenchmarkReport, SimError> {
    let runs_dir = dir.join("runs");
    let stored: StoredSweep =
        serde_json::from_str(&fs::read_to_string(runs_dir.join("sweep.json"))?)?;
    let mut rows = Vec::new();
    for line in fs::read_to_string(runs_dir.join("metrics.jsonl"))?.lines() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str::<RunRow>(line)?);
    }
    let report = aggregate(&rows, &stored.expected, stored.meta, metrics);
    write_report_files(dir, &rows, &report, metrics)?;
    Ok(report)
}
