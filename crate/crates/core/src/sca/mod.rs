//! Successive convex approximation for the joint trajectory / TDMA problem.
//!
//! Each iteration solves one convex trajectory subproblem with the schedule
//! held fixed, then refreshes the schedule with the max-min-surplus LP on the
//! new trajectory. Iterates are accepted only if the surrogate energy does
//! not increase, so the recorded trace is monotone.

mod conic;
mod subproblem;
pub mod surrogate;

use log::{debug, trace, warn};
use serde::{Deserialize, Serialize};

use crate::comms::{
    achievable_fraction, allocate_time, collected_bits, rate_table, Allocation, Buoy,
    ChannelParams, Schedule, LP_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{
    min_airspeed, slot_powers, total_energy, Trajectory, UavParams, Wind, KINEMATIC_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// q[0] = q0, v[0] = v0, q[N+1] = qF, v[N+1] = vF.
    FixedEndpoints,
    /// q[0] = q0, q[N+1] = qF and v[N+1] = v[0]; the common end velocity is
    /// free.
    MatchedVelocity,
    /// q[N+1] = q[0], v[N+1] = v[0]; the start point itself is free.
    PeriodicLap,
}

/// One instance of the energy-minimisation problem over N + 1 slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightProblem {
    pub uav: UavParams,
    pub chan: ChannelParams,
    pub buoys: Vec<Buoy>,
    pub wind: Wind,
    pub start: Vec2,
    pub end: Vec2,
    pub start_velocity: Vec2,
    pub end_velocity: Vec2,
    pub slot_duration: f64,
    /// N; the flight has N + 1 slots and N + 2 sample points.
    pub slot_count: usize,
    pub boundary: BoundaryMode,
}

impl FlightProblem {
    pub fn validate(&self) -> Result<()> {
        self.uav.validate()?;
        self.chan.validate()?;
        if self.slot_count < 1 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if !(self.slot_duration > 0.0) {
            return Err(Error::InvalidArgument("slot duration must be positive".into()));
        }
        let v_min = min_airspeed(&self.wind, &self.uav);
        let pinned: &[(&str, Vec2)] = match self.boundary {
            BoundaryMode::MatchedVelocity => &[],
            _ => &[("v0", self.start_velocity), ("vF", self.end_velocity)],
        };
        for &(name, v) in pinned {
            let s = v.norm();
            if s < v_min - KINEMATIC_TOLERANCE || s > self.uav.v_max + KINEMATIC_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "{name} speed {s:.6} outside [{v_min}, {}]",
                    self.uav.v_max
                )));
            }
        }
        if self.boundary == BoundaryMode::PeriodicLap
            && ((self.start - self.end).norm() > KINEMATIC_TOLERANCE
                || (self.start_velocity - self.end_velocity).norm() > KINEMATIC_TOLERANCE)
        {
            return Err(Error::InvalidArgument(
                "periodic laps need q0 = qF and v0 = vF".into(),
            ));
        }
        Ok(())
    }

    pub fn demands(&self) -> Vec<f64> {
        self.buoys.iter().map(|b| b.demand).collect()
    }
}

/// How the kinetic term m·aᵀv of the power model enters the subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KineticTreatment {
    /// Dropped from the subproblem. Summed over the slots it equals
    /// ½m(‖v_end‖² − ‖v_start‖²), a constant under the boundary conditions.
    Telescoped,
    /// Kept, together with the outer absolute value, through a convex
    /// majorant of the slot power.
    Majorized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScaConfig {
    pub max_iterations: usize,
    /// Stop once the relative surrogate-energy decrease falls below this.
    pub objective_tolerance: f64,
    /// Per-component cap on position steps (m).
    pub trust_position: f64,
    /// Per-component cap on airspeed steps (m/s).
    pub trust_velocity: f64,
    pub subproblem_tolerance: f64,
    pub kinetic: KineticTreatment,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            objective_tolerance: 1e-3,
            trust_position: 50.0,
            trust_velocity: 5.0,
            subproblem_tolerance: 1e-8,
            kinetic: KineticTreatment::Majorized,
        }
    }
}

impl ScaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || !(self.objective_tolerance > 0.0 && self.objective_tolerance < 1.0)
            || !(self.trust_position > 0.0)
            || !(self.trust_velocity > 0.0)
            || !(self.subproblem_tolerance > 0.0)
        {
            return Err(Error::InvalidArgument("SCA settings must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Surrogate energy (J) at the accepted iterate.
    pub objective: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub trajectory: Trajectory,
    pub schedule: Schedule,
    /// Literal propulsion energy of `trajectory` (J).
    pub energy: f64,
    pub per_slot_power: Vec<f64>,
    pub per_buoy_bits: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
}

impl Solution {
    /// Assembles a solution from a trajectory and schedule, evaluating the
    /// energy and throughput directly.
    pub fn evaluate(
        problem: &FlightProblem,
        trajectory: Trajectory,
        schedule: Schedule,
        iterations: Vec<IterationRecord>,
    ) -> Result<Self> {
        let per_slot_power = slot_powers(&trajectory, &problem.uav)?;
        let energy = total_energy(&trajectory, &problem.uav)?;
        let per_buoy_bits = collected_bits(
            &trajectory,
            &schedule,
            &problem.buoys,
            &problem.chan,
            problem.uav.altitude,
        )?;
        Ok(Self {
            trajectory,
            schedule,
            energy,
            per_slot_power,
            per_buoy_bits,
            iterations,
        })
    }

    pub fn final_objective(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.objective)
    }
}

/// Surrogate energy of a trajectory: Σ Tt·majorant(v[n], a[n]). This is the
/// quantity the iteration trace records.
pub fn surrogate_energy(traj: &Trajectory, uav: &UavParams, kinetic: KineticTreatment) -> f64 {
    let with_kinetic = kinetic == KineticTreatment::Majorized;
    (0..traj.slots())
        .map(|n| {
            surrogate::abs_power_majorant(
                traj.airspeeds[n],
                traj.accelerations[n],
                traj.slot_duration,
                uav,
                with_kinetic,
            )
        })
        .sum::<f64>()
        * traj.slot_duration
}

/// Largest violation of the hard constraints, mixing units (m, m/s, m/s², s,
/// and the relative throughput deficit). Diagnostic only.
pub fn constraint_violation(problem: &FlightProblem, traj: &Trajectory, sched: &Schedule) -> f64 {
    let (kp, kv) = traj.kinematic_residual(&problem.wind);
    let mut worst = kp.max(kv);
    let last = traj.positions.len() - 1;
    match problem.boundary {
        BoundaryMode::FixedEndpoints => {
            worst = worst
                .max((traj.positions[0] - problem.start).norm())
                .max((traj.airspeeds[0] - problem.start_velocity).norm())
                .max((traj.positions[last] - problem.end).norm())
                .max((traj.airspeeds[last] - problem.end_velocity).norm());
        }
        BoundaryMode::MatchedVelocity => {
            worst = worst
                .max((traj.positions[0] - problem.start).norm())
                .max((traj.positions[last] - problem.end).norm())
                .max((traj.airspeeds[last] - traj.airspeeds[0]).norm());
        }
        BoundaryMode::PeriodicLap => {
            worst = worst
                .max((traj.positions[last] - traj.positions[0]).norm())
                .max((traj.airspeeds[last] - traj.airspeeds[0]).norm());
        }
    }
    let v_min = min_airspeed(&problem.wind, &problem.uav);
    for n in 0..traj.slots() {
        let s = traj.airspeeds[n].norm();
        worst = worst
            .max(v_min - s)
            .max(s - problem.uav.v_max)
            .max(traj.accelerations[n].norm() - problem.uav.a_max);
    }
    let (over, neg) = sched.violations(traj.slot_duration);
    worst = worst.max(over).max(neg);
    if let Ok(bits) = collected_bits(traj, sched, &problem.buoys, &problem.chan, problem.uav.altitude)
    {
        for (b, q) in problem.buoys.iter().zip(bits) {
            if b.demand > 0.0 {
                worst = worst.max((b.demand - q) / b.demand);
            }
        }
    }
    worst.max(0.0)
}

/// Re-imposes exact discrete kinematics and the terminal conditions on a
/// subproblem solution.
fn restore_consistency(problem: &FlightProblem, traj: &mut Trajectory) {
    match problem.boundary {
        BoundaryMode::FixedEndpoints => {
            traj.positions[0] = problem.start;
            traj.airspeeds[0] = problem.start_velocity;
        }
        BoundaryMode::MatchedVelocity => traj.positions[0] = problem.start,
        BoundaryMode::PeriodicLap => {}
    }
    for _ in 0..2 {
        traj.repropagate(&problem.wind);
        let (q_target, v_target) = match problem.boundary {
            BoundaryMode::FixedEndpoints => (problem.end, Some(problem.end_velocity)),
            BoundaryMode::MatchedVelocity => (problem.end, Some(traj.airspeeds[0])),
            BoundaryMode::PeriodicLap => (traj.positions[0], Some(traj.airspeeds[0])),
        };
        traj.steer_terminal(q_target, v_target, &problem.wind);
    }
}

fn check_initial(problem: &FlightProblem, traj: &Trajectory, sched: &Schedule) -> Result<()> {
    traj.check_shape()?;
    if traj.slots() != problem.slot_count + 1 {
        return Err(Error::Dimension(format!(
            "initial trajectory has {} slots, problem expects {}",
            traj.slots(),
            problem.slot_count + 1
        )));
    }
    if (traj.slot_duration - problem.slot_duration).abs() > 1e-12 {
        return Err(Error::InvalidArgument("slot duration mismatch".into()));
    }
    if sched.buoys() != problem.buoys.len() || sched.slots() != traj.slots() {
        return Err(Error::Dimension("initial schedule shape mismatch".into()));
    }
    let scale = traj
        .positions
        .iter()
        .map(|q| q.norm())
        .fold(1.0, f64::max);
    let (kp, kv) = traj.kinematic_residual(&problem.wind);
    if kp > KINEMATIC_TOLERANCE * scale || kv > KINEMATIC_TOLERANCE * problem.uav.v_max {
        return Err(Error::InvalidArgument(format!(
            "initial trajectory violates kinematics (residual {kp:.3e} m, {kv:.3e} m/s)"
        )));
    }
    let tol = 1e-6;
    let last = traj.positions.len() - 1;
    let boundary_gap = match problem.boundary {
        BoundaryMode::FixedEndpoints => (traj.positions[0] - problem.start)
            .norm()
            .max((traj.airspeeds[0] - problem.start_velocity).norm())
            .max((traj.positions[last] - problem.end).norm())
            .max((traj.airspeeds[last] - problem.end_velocity).norm()),
        BoundaryMode::MatchedVelocity => (traj.positions[0] - problem.start)
            .norm()
            .max((traj.positions[last] - problem.end).norm())
            .max((traj.airspeeds[last] - traj.airspeeds[0]).norm()),
        BoundaryMode::PeriodicLap => (traj.positions[last] - traj.positions[0])
            .norm()
            .max((traj.airspeeds[last] - traj.airspeeds[0]).norm()),
    };
    if boundary_gap > KINEMATIC_TOLERANCE * scale {
        return Err(Error::InvalidArgument(format!(
            "initial trajectory misses boundary conditions by {boundary_gap:.3e}"
        )));
    }
    let v_min = min_airspeed(&problem.wind, &problem.uav);
    for n in 0..traj.slots() {
        let s = traj.airspeeds[n].norm();
        if s < v_min - tol || s > problem.uav.v_max + tol {
            return Err(Error::InvalidArgument(format!(
                "initial airspeed {s:.6} at slot {n} outside [{v_min}, {}]",
                problem.uav.v_max
            )));
        }
        if traj.accelerations[n].norm() > problem.uav.a_max + tol {
            return Err(Error::InvalidArgument(format!(
                "initial acceleration at slot {n} exceeds a_max"
            )));
        }
    }
    let (over, neg) = sched.violations(traj.slot_duration);
    if over > tol * traj.slot_duration || neg > tol * traj.slot_duration {
        return Err(Error::InvalidArgument(
            "initial schedule violates the TDMA budget".into(),
        ));
    }
    Ok(())
}

fn meets_demands(problem: &FlightProblem, traj: &Trajectory, sched: &Schedule) -> bool {
    let tol = LP_TOLERANCE * problem.demands().iter().cloned().fold(1.0, f64::max);
    match collected_bits(traj, sched, &problem.buoys, &problem.chan, problem.uav.altitude) {
        Ok(bits) => problem
            .buoys
            .iter()
            .zip(bits)
            .all(|(b, q)| q >= b.demand - tol),
        Err(_) => false,
    }
}

fn refresh_schedule(problem: &FlightProblem, traj: &Trajectory) -> Result<Allocation> {
    let rates = rate_table(traj, &problem.buoys, &problem.chan, problem.uav.altitude);
    allocate_time(&rates, &problem.demands(), traj.slot_duration)
}

fn infeasible(problem: &FlightProblem, traj: &Trajectory, reason: String) -> Error {
    let rates = rate_table(traj, &problem.buoys, &problem.chan, problem.uav.altitude);
    let achievable_fraction =
        achievable_fraction(&rates, &problem.demands(), traj.slot_duration).unwrap_or(0.0);
    Error::Infeasible {
        reason,
        achievable_fraction,
    }
}

/// Runs SCA from a feasible starting trajectory and schedule.
pub fn solve_p(
    problem: &FlightProblem,
    init: (&Trajectory, &Schedule),
    cfg: &ScaConfig,
) -> Result<Solution> {
    problem.validate()?;
    cfg.validate()?;
    let (init_traj, init_sched) = init;
    check_initial(problem, init_traj, init_sched)?;

    let mut current = init_traj.clone();
    let mut schedule = init_sched.clone();
    if !meets_demands(problem, &current, &schedule) {
        match refresh_schedule(problem, &current)? {
            Allocation::Feasible { schedule: s, .. } => schedule = s,
            Allocation::Infeasible { best_min_slack } => {
                return Err(infeasible(
                    problem,
                    &current,
                    format!("starting trajectory short of demand by {:.3e} bits", -best_min_slack),
                ))
            }
        }
    }

    let mut objective = surrogate_energy(&current, &problem.uav, cfg.kinetic);
    let mut trace = vec![IterationRecord {
        iteration: 0,
        objective,
        max_violation: constraint_violation(problem, &current, &schedule),
    }];

    for iteration in 1..=cfg.max_iterations {
        let candidate = match subproblem::solve(problem, &current, &schedule, cfg) {
            subproblem::Outcome::Solved { trajectory, objective } => {
                trace!("iteration {iteration}: subproblem bound {objective:.3}");
                trajectory
            }
            subproblem::Outcome::Infeasible(detail) if iteration == 1 => {
                return Err(infeasible(
                    problem,
                    &current,
                    format!("first convex subproblem infeasible ({detail})"),
                ));
            }
            subproblem::Outcome::Infeasible(detail) | subproblem::Outcome::Failed(detail) => {
                warn!("SCA stopped at iteration {iteration}: {detail}");
                break;
            }
        };
        let mut candidate = candidate;
        restore_consistency(problem, &mut candidate);

        let cand_objective = surrogate_energy(&candidate, &problem.uav, cfg.kinetic);
        if !(cand_objective <= objective) {
            debug!("iteration {iteration}: no decrease ({cand_objective} vs {objective})");
            break;
        }
        let next_schedule = match refresh_schedule(problem, &candidate)? {
            Allocation::Feasible { schedule: s, .. } => s,
            Allocation::Infeasible { .. } if meets_demands(problem, &candidate, &schedule) => {
                schedule.clone()
            }
            Allocation::Infeasible { best_min_slack } => {
                debug!("iteration {iteration}: candidate short by {best_min_slack}");
                break;
            }
        };
        let improvement = (objective - cand_objective) / objective.abs().max(f64::MIN_POSITIVE);
        current = candidate;
        schedule = next_schedule;
        objective = cand_objective;
        trace.push(IterationRecord {
            iteration,
            objective,
            max_violation: constraint_violation(problem, &current, &schedule),
        });
        debug!("iteration {iteration}: surrogate energy {objective:.3} J");
        if improvement < cfg.objective_tolerance {
            break;
        }
    }

    Solution::evaluate(problem, current, schedule, trace)
}
