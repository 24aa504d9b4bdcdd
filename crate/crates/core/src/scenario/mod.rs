//! Scenario configuration, experiment drivers and result persistence.

mod config;
mod flight;
mod io;

pub use config::{
    BoundaryConfig, BuoyConfig, ChannelConfig, CyclicalOptions, DiscretizationConfig, Mode,
    OneFlightConfig, ScenarioConfig, WindConfig,
};
pub use flight::{
    candidate_durations, loiter_path, run_baseline_search, run_one_flight_search, start_candidates,
    BaselineResult, FlightSetup, OneFlightResult, StartCandidate,
};
pub use io::{
    emit_outputs, emit_sweep, load_run, parse_schedule_csv, parse_sweep_csv, parse_trajectory_csv,
    write_schedule_csv, write_trajectory_csv, LoadedRun,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comms::{Buoy, Schedule};
use crate::cyclical::{cyclical_optimize, partition_laps, PatternKind, PatternParams};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::Trajectory;
use crate::sca::{BoundaryMode, FlightProblem, IterationRecord};
use crate::validator::{validate, Tolerances, ValidationReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    OneFlight,
    Baseline,
    Cyclical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Solved,
    Infeasible { reason: String, achievable_fraction: f64 },
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunSummary {
    /// Mission energy (J); present only when the validator passed.
    pub energy_j: Option<f64>,
    /// Energy as reported by the solver, before validation.
    pub solver_energy_j: f64,
    /// Time flown by the stored trajectory (s); one lap for cyclical runs.
    pub flight_time_s: f64,
    pub per_buoy_bits: Vec<f64>,
    pub lap_count: usize,
    pub per_lap_demand: Vec<f64>,
    pub per_lap_energy_j: f64,
    pub pattern_kind: Option<PatternKind>,
    pub pattern: Option<PatternParams>,
    /// Baseline runs: the chosen constant airspeed (m/s).
    pub airspeed: Option<f64>,
}

/// One row of an energy-versus-M sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pattern: PatternKind,
    pub laps: usize,
    pub per_lap_demand: f64,
    pub per_lap_energy_j: Option<f64>,
    pub total_energy_j: Option<f64>,
    pub period_s: Option<f64>,
    pub radius_m: Option<f64>,
    pub theta_rad: Option<f64>,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub kind: RunKind,
    pub config: ScenarioConfig,
    #[serde(flatten)]
    pub status: RunStatus,
    pub summary: RunSummary,
    pub problem: Option<FlightProblem>,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
    #[serde(skip)]
    pub schedule: Option<Schedule>,
    pub iterations: Vec<IterationRecord>,
    pub validation: Option<ValidationReport>,
    pub timing_s: f64,
    pub version: String,
}

impl RunRecord {
    pub fn new(label: String, kind: RunKind, config: &ScenarioConfig) -> Self {
        Self {
            label,
            kind,
            config: config.clone(),
            status: RunStatus::Solved,
            summary: RunSummary::default(),
            problem: None,
            trajectory: None,
            schedule: None,
            iterations: Vec::new(),
            validation: None,
            timing_s: 0.0,
            version: VERSION.into(),
        }
    }

    fn fail(mut self, err: Error) -> Self {
        self.status = match err {
            Error::Infeasible {
                reason,
                achievable_fraction,
            } => RunStatus::Infeasible {
                reason,
                achievable_fraction,
            },
            other => RunStatus::Failed {
                message: other.to_string(),
            },
        };
        self
    }

    /// Solved and confirmed by the validator.
    pub fn passed(&self) -> bool {
        self.status == RunStatus::Solved && self.validation.as_ref().is_some_and(|v| v.passed())
    }

    pub fn verdict(&self) -> &'static str {
        match (&self.status, self.passed()) {
            (RunStatus::Solved, true) => "pass",
            (RunStatus::Solved, false) => "fail",
            (RunStatus::Infeasible { .. }, _) => "infeasible",
            (RunStatus::Failed { .. }, _) => "error",
        }
    }

    /// Validated mission energy, if any.
    pub fn energy(&self) -> Option<f64> {
        self.summary.energy_j
    }

    /// Validates the stored solution and fills the pass-gated energy.
    fn seal(&mut self, laps: usize) -> Result<()> {
        let (Some(problem), Some(traj), Some(sched)) = (&self.problem, &self.trajectory, &self.schedule)
        else {
            return Ok(());
        };
        let report = validate(traj, sched, problem, &Tolerances::default())?;
        self.summary.energy_j = report.passed().then_some(report.energy_j * laps as f64);
        self.validation = Some(report);
        Ok(())
    }
}

fn setup_from_config(cfg: &ScenarioConfig) -> Result<FlightSetup> {
    let mut buoys = cfg.buoy_list();
    if cfg.one_flight.nearest_neighbor_order {
        buoys = nearest_neighbor_order(cfg.boundary.start, buoys);
    }
    Ok(FlightSetup {
        uav: cfg.uav,
        chan: cfg.channel_params(),
        buoys,
        wind: cfg.wind.wind()?,
        start: cfg.boundary.start,
        end: cfg.boundary.end,
        start_velocity: cfg.boundary.start_velocity,
        end_velocity: cfg.boundary.end_velocity,
        slot_duration: cfg.discretization.slot_duration,
    })
}

/// Greedy visiting order: repeatedly take the closest unvisited buoy.
pub fn nearest_neighbor_order(start: Vec2, mut buoys: Vec<Buoy>) -> Vec<Buoy> {
    let mut ordered = Vec::with_capacity(buoys.len());
    let mut here = start;
    while !buoys.is_empty() {
        let (i, _) = buoys
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.position.distance(here).total_cmp(&b.1.position.distance(here)))
            .expect("non-empty");
        let b = buoys.remove(i);
        here = b.position;
        ordered.push(b);
    }
    ordered
}

fn label_for(cfg: &ScenarioConfig, suffix: &str) -> String {
    if suffix.is_empty() {
        cfg.name.clone()
    } else {
        format!("{}-{suffix}", cfg.name)
    }
}

/// Baseline: straight line at the best constant airspeed.
pub fn run_baseline(cfg: &ScenarioConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let clock = Instant::now();
    let setup = setup_from_config(cfg)?;
    let mut rec = RunRecord::new(label_for(cfg, "baseline"), RunKind::Baseline, cfg);
    match run_baseline_search(&setup) {
        Ok(b) => {
            let slots = b.trajectory.slots();
            let problem = FlightProblem {
                uav: setup.uav,
                chan: setup.chan,
                buoys: setup.buoys.clone(),
                wind: setup.wind,
                start: setup.start,
                end: setup.end,
                start_velocity: b.trajectory.airspeeds[0],
                end_velocity: b.trajectory.airspeeds[slots],
                slot_duration: setup.slot_duration,
                slot_count: slots - 1,
                boundary: BoundaryMode::MatchedVelocity,
            };
            rec.summary = RunSummary {
                solver_energy_j: b.energy,
                flight_time_s: b.duration,
                per_buoy_bits: crate::comms::collected_bits(
                    &b.trajectory,
                    &b.schedule,
                    &setup.buoys,
                    &setup.chan,
                    setup.uav.altitude,
                )?,
                lap_count: 1,
                per_lap_demand: setup.buoys.iter().map(|b| b.demand).collect(),
                per_lap_energy_j: b.energy,
                airspeed: Some(b.airspeed),
                ..RunSummary::default()
            };
            rec.problem = Some(problem);
            rec.trajectory = Some(b.trajectory);
            rec.schedule = Some(b.schedule);
            rec.seal(1)?;
        }
        Err(e) => rec = rec.fail(e),
    }
    rec.timing_s = clock.elapsed().as_secs_f64();
    Ok(rec)
}

/// One flight from q0 to qF designed with SCA.
pub fn run_one_flight(cfg: &ScenarioConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let clock = Instant::now();
    let setup = setup_from_config(cfg)?;
    let mut rec = RunRecord::new(label_for(cfg, "one-flight"), RunKind::OneFlight, cfg);
    match run_one_flight_search(&setup, cfg.discretization.duration, &cfg.one_flight, &cfg.solver) {
        Ok(r) => {
            let sol = r.solution;
            rec.summary = RunSummary {
                solver_energy_j: sol.energy,
                flight_time_s: sol.trajectory.duration(),
                per_buoy_bits: sol.per_buoy_bits.clone(),
                lap_count: 1,
                per_lap_demand: setup.buoys.iter().map(|b| b.demand).collect(),
                per_lap_energy_j: sol.energy,
                ..RunSummary::default()
            };
            rec.iterations = sol.iterations;
            rec.problem = Some(r.problem);
            rec.trajectory = Some(sol.trajectory);
            rec.schedule = Some(sol.schedule);
            rec.seal(1)?;
        }
        Err(e) => rec = rec.fail(e),
    }
    rec.timing_s = clock.elapsed().as_secs_f64();
    Ok(rec)
}

/// Lap counts to run: the configured list, or ⌈Q/Q0⌉ from the reference
/// per-lap volume.
pub fn lap_counts(cfg: &ScenarioConfig) -> Result<Vec<usize>> {
    if !cfg.cyclical.laps.is_empty() {
        return Ok(cfg.cyclical.laps.clone());
    }
    let q = cfg.buoys.iter().map(|b| b.demand).fold(0.0, f64::max);
    match cfg.cyclical.per_lap_ref {
        Some(q0) => Ok(vec![partition_laps(q, q0)?]),
        None => Ok(vec![1]),
    }
}

fn cyclical_record(cfg: &ScenarioConfig, kind: PatternKind, laps: usize) -> Result<RunRecord> {
    let clock = Instant::now();
    let mut rec = RunRecord::new(
        label_for(cfg, &format!("{}-M{laps}", kind.name())),
        RunKind::Cyclical,
        cfg,
    );
    rec.summary.lap_count = laps;
    rec.summary.pattern_kind = Some(kind);
    let wind = cfg.wind.wind()?;
    let chan = cfg.channel_params();
    let buoys = cfg.buoy_list();
    match cyclical_optimize(laps, kind, &buoys, &wind, &chan, &cfg.uav, &cfg.cyclical_config()) {
        Ok(plan) => {
            let sol = &plan.per_lap_solution;
            let lap_buoys: Vec<Buoy> = buoys
                .iter()
                .zip(&plan.per_lap_demand)
                .map(|(b, d)| Buoy::new(b.position, *d))
                .collect();
            let traj = &sol.trajectory;
            let problem = FlightProblem {
                uav: cfg.uav,
                chan,
                buoys: lap_buoys,
                wind,
                start: traj.positions[0],
                end: traj.positions[0],
                start_velocity: traj.airspeeds[0],
                end_velocity: traj.airspeeds[0],
                slot_duration: traj.slot_duration,
                slot_count: traj.slots() - 1,
                boundary: BoundaryMode::PeriodicLap,
            };
            rec.summary = RunSummary {
                solver_energy_j: plan.total_energy(),
                flight_time_s: traj.duration(),
                per_buoy_bits: sol.per_buoy_bits.clone(),
                lap_count: laps,
                per_lap_demand: plan.per_lap_demand.clone(),
                per_lap_energy_j: plan.per_lap_energy(),
                pattern_kind: Some(kind),
                pattern: Some(plan.pattern),
                airspeed: None,
                energy_j: None,
            };
            rec.iterations = sol.iterations.clone();
            rec.problem = Some(problem);
            rec.trajectory = Some(sol.trajectory.clone());
            rec.schedule = Some(sol.schedule.clone());
            rec.seal(laps)?;
        }
        Err(e) => rec = rec.fail(e),
    }
    rec.timing_s = clock.elapsed().as_secs_f64();
    Ok(rec)
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

/// One record per (pattern, M) cell; infeasible cells are recorded and the
/// sweep continues.
pub fn run_cyclical_sweep(cfg: &ScenarioConfig, laps: &[usize]) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    if laps.is_empty() || laps.contains(&0) {
        return Err(Error::InvalidArgument("lap counts must be positive".into()));
    }
    let cells: Vec<(PatternKind, usize)> = cfg
        .cyclical
        .patterns
        .iter()
        .flat_map(|&k| laps.iter().map(move |&m| (k, m)))
        .collect();
    with_workers(cfg.workers, || {
        cells
            .par_iter()
            .map(|&(kind, m)| cyclical_record(cfg, kind, m))
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn sweep_rows(records: &[RunRecord]) -> Vec<SweepRow> {
    records
        .iter()
        .filter(|r| r.kind == RunKind::Cyclical)
        .map(|r| SweepRow {
            pattern: r.summary.pattern_kind.unwrap_or(PatternKind::Circular),
            laps: r.summary.lap_count,
            per_lap_demand: r.summary.per_lap_demand.iter().cloned().fold(0.0, f64::max),
            per_lap_energy_j: r.energy().map(|e| e / r.summary.lap_count.max(1) as f64),
            total_energy_j: r.energy(),
            period_s: r.summary.pattern.map(|p| p.period_t0),
            radius_m: r.summary.pattern.map(|p| p.radius_r),
            theta_rad: r.summary.pattern.map(|p| p.orientation_theta),
            verdict: r.verdict().into(),
        })
        .collect()
}

/// Multi-buoy study: a one-flight design for the long-distance layout, or the
/// cheapest cyclical plan over the configured patterns and lap counts.
pub fn run_multibuoy(cfg: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    match cfg.mode {
        Mode::OneFlight => Ok(vec![run_one_flight(cfg)?]),
        Mode::Baseline => Ok(vec![run_baseline(cfg)?]),
        Mode::Cyclical => run_cyclical_sweep(cfg, &lap_counts(cfg)?),
    }
}

/// Dispatches on the configured mode.
pub fn run(cfg: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    run_multibuoy(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_neighbor_chain() {
        let buoys = vec![
            Buoy::new(Vec2::new(900.0, 0.0), 1.0),
            Buoy::new(Vec2::new(100.0, 0.0), 1.0),
            Buoy::new(Vec2::new(500.0, 10.0), 1.0),
        ];
        let order = nearest_neighbor_order(Vec2::ZERO, buoys);
        let xs: Vec<f64> = order.iter().map(|b| b.position.x).collect();
        assert_eq!(xs, vec![100.0, 500.0, 900.0]);
    }

    #[test]
    fn zero_demand_baseline_record_passes() {
        let mut cfg = ScenarioConfig::default();
        cfg.buoys[0].demand = 0.0;
        cfg.mode = Mode::Baseline;
        let rec = run_baseline(&cfg).unwrap();
        assert!(rec.passed(), "{:?}", rec.validation.as_ref().map(|v| &v.reasons));
        let sched = rec.schedule.as_ref().unwrap();
        assert!(sched.tau.iter().flatten().all(|t| *t == 0.0));
    }

}
