//! Cyclical multi-lap planning: the total demand is split over M identical
//! laps, each lap is seeded by a closed circular or 8-shape pattern, and the
//! lap is then refined with periodic SCA over a few nearby periods.

mod pattern;
mod search;

pub use pattern::{generate_pattern, pattern_slots, PatternKind, PatternParams};
pub use search::{geometric_grid, initial_trajectory, pattern_at_period, InitialPattern, SearchConfig};

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comms::{Buoy, ChannelParams};
use crate::error::{Error, Result};
use crate::kinematics::{Trajectory, UavParams, Wind};
use crate::sca::{
    solve_p, surrogate_energy, BoundaryMode, FlightProblem, IterationRecord, ScaConfig, Solution,
};

/// M = ⌈Q/Q0⌉.
pub fn partition_laps(total: f64, per_lap_ref: f64) -> Result<usize> {
    if !(per_lap_ref > 0.0) || !(total >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cannot partition {total} bits into laps of {per_lap_ref}"
        )));
    }
    Ok(((total / per_lap_ref).ceil() as usize).max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CyclicalConfig {
    pub search: SearchConfig,
    pub sca: ScaConfig,
    /// l0: fine-tuning periods in T0·[1 − span, 1 + span].
    pub fine_tune_steps: usize,
    pub fine_tune_span: f64,
    /// Extra 8-shape orientations, evenly spaced from the initial θ, each
    /// refined with SCA at the initial period.
    pub orientation_candidates: usize,
    pub slot_duration: f64,
}

impl Default for CyclicalConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            sca: ScaConfig::default(),
            fine_tune_steps: 9,
            fine_tune_span: 0.2,
            orientation_candidates: 8,
            slot_duration: 0.5,
        }
    }
}

/// One fine-tuning candidate period and what became of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineTuneRecord {
    pub period: f64,
    pub theta: f64,
    /// Literal per-lap energy after SCA, if the candidate produced one.
    pub energy: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapPlan {
    pub lap_count: usize,
    /// Q̄_k/M for every buoy (bits).
    pub per_lap_demand: Vec<f64>,
    /// Pattern that seeded the selected lap.
    pub pattern: PatternParams,
    /// Energy of the pattern from the initial search (J per lap).
    pub initial_energy: f64,
    pub per_lap_solution: Solution,
    pub fine_tune: Vec<FineTuneRecord>,
}

impl LapPlan {
    pub fn per_lap_energy(&self) -> f64 {
        self.per_lap_solution.energy
    }

    pub fn total_energy(&self) -> f64 {
        self.lap_count as f64 * self.per_lap_energy()
    }

    /// Largest per-buoy per-lap demand.
    pub fn per_lap_demand_max(&self) -> f64 {
        self.per_lap_demand.iter().cloned().fold(0.0, f64::max)
    }
}

fn periodic_problem(
    traj: &Trajectory,
    buoys: &[Buoy],
    wind: &Wind,
    chan: &ChannelParams,
    uav: &UavParams,
) -> FlightProblem {
    FlightProblem {
        uav: *uav,
        chan: *chan,
        buoys: buoys.to_vec(),
        wind: *wind,
        start: traj.positions[0],
        end: traj.positions[0],
        start_velocity: traj.airspeeds[0],
        end_velocity: traj.airspeeds[0],
        slot_duration: traj.slot_duration,
        slot_count: traj.slots() - 1,
        boundary: BoundaryMode::PeriodicLap,
    }
}

/// Plans one lap of M for the demands carried by `buoys` (totals over the
/// mission) and returns the cheapest lap found.
#[allow(clippy::too_many_arguments)]
pub fn cyclical_optimize(
    lap_count: usize,
    kind: PatternKind,
    buoys: &[Buoy],
    wind: &Wind,
    chan: &ChannelParams,
    uav: &UavParams,
    cfg: &CyclicalConfig,
) -> Result<LapPlan> {
    if lap_count == 0 {
        return Err(Error::InvalidArgument("M must be at least 1".into()));
    }
    if cfg.fine_tune_steps == 0 || !(cfg.fine_tune_span >= 0.0 && cfg.fine_tune_span < 1.0) {
        return Err(Error::InvalidArgument("fine-tune grid is empty".into()));
    }
    let per_lap_demand: Vec<f64> = buoys.iter().map(|b| b.demand / lap_count as f64).collect();
    let lap_buoys: Vec<Buoy> = buoys
        .iter()
        .zip(&per_lap_demand)
        .map(|(b, d)| Buoy::new(b.position, *d))
        .collect();

    let init = initial_trajectory(
        kind,
        &lap_buoys,
        &per_lap_demand,
        wind,
        chan,
        uav,
        &cfg.search,
        cfg.slot_duration,
    )?;
    info!(
        "M={lap_count} {}: initial pattern T0={:.2} s r={:.1} m θ={:.3} E={:.1} J",
        kind.name(),
        init.params.period_t0,
        init.params.radius_r,
        init.params.orientation_theta,
        init.energy
    );

    // the raw pattern itself is the fallback candidate
    let seed_problem = periodic_problem(&init.trajectory, &lap_buoys, wind, chan, uav);
    let seed = Solution::evaluate(
        &seed_problem,
        init.trajectory.clone(),
        init.schedule.clone(),
        vec![IterationRecord {
            iteration: 0,
            objective: surrogate_energy(&init.trajectory, uav, cfg.sca.kinetic),
            max_violation: 0.0,
        }],
    )?;

    let t0 = init.params.period_t0;
    let theta0 = init.params.orientation_theta;
    let mut cells: Vec<(f64, f64)> = if cfg.fine_tune_steps == 1 {
        vec![(t0, theta0)]
    } else {
        (0..cfg.fine_tune_steps)
            .map(|i| {
                let f = 1.0 - cfg.fine_tune_span
                    + 2.0 * cfg.fine_tune_span * i as f64 / (cfg.fine_tune_steps - 1) as f64;
                (t0 * f, theta0)
            })
            .collect()
    };
    if kind == PatternKind::EightShape {
        let n = cfg.orientation_candidates;
        cells.extend((1..n).map(|j| {
            let theta = (theta0 + 2.0 * std::f64::consts::PI * j as f64 / n as f64)
                .rem_euclid(2.0 * std::f64::consts::PI);
            (t0, theta)
        }));
    }

    let outcomes: Vec<(FineTuneRecord, Option<(PatternParams, Solution)>)> = cells
        .par_iter()
        .map(|&(period, theta)| {
            let attempt = || -> Result<(PatternParams, Solution)> {
                let seed = pattern_at_period(
                    kind,
                    &lap_buoys,
                    &per_lap_demand,
                    wind,
                    chan,
                    uav,
                    &cfg.search,
                    cfg.slot_duration,
                    period,
                    theta,
                )?;
                let problem = periodic_problem(&seed.trajectory, &lap_buoys, wind, chan, uav);
                let sol = solve_p(&problem, (&seed.trajectory, &seed.schedule), &cfg.sca)?;
                Ok((seed.params, sol))
            };
            match attempt() {
                Ok((params, sol)) => {
                    debug!("fine-tune T={period:.2} θ={theta:.3}: E={:.2}", sol.energy);
                    (
                        FineTuneRecord {
                            period,
                            theta,
                            energy: Some(sol.energy),
                            note: format!("r={:.2} m, {} SCA iterations", params.radius_r, sol.iterations.len() - 1),
                        },
                        Some((params, sol)),
                    )
                }
                Err(e) => (
                    FineTuneRecord {
                        period,
                        theta,
                        energy: None,
                        note: e.to_string(),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut best_params = init.params;
    let mut best = seed;
    let mut fine_tune = Vec::with_capacity(outcomes.len());
    for (record, result) in outcomes {
        if let Some((params, sol)) = result {
            if sol.energy < best.energy {
                best = sol;
                best_params = params;
            }
        }
        fine_tune.push(record);
    }

    Ok(LapPlan {
        lap_count,
        per_lap_demand,
        pattern: best_params,
        initial_energy: init.energy,
        per_lap_solution: best,
        fine_tune,
    })
}
