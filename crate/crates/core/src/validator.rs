//! Independent replay of a trajectory and schedule.
//!
//! Everything here is recomputed from first principles: positions are
//! replayed forward from q[0], v[0], rates and power use their own
//! formulas, and none of the solver's constraint assembly is reused.

use serde::{Deserialize, Serialize};

use crate::comms::Schedule;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::Trajectory;
use crate::sca::{BoundaryMode, FlightProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Replay drift allowed on positions (m) and airspeeds (m/s).
    pub kinematic: f64,
    /// Allowed throughput shortfall as a fraction of each demand.
    pub throughput_relative: f64,
    /// Absolute slack on speed, acceleration and TDMA bounds.
    pub bounds: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kinematic: 1e-4,
            throughput_relative: 1e-3,
            bounds: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundViolations {
    pub count: usize,
    /// Largest excess beyond the bound (0 when none).
    pub worst_margin: f64,
}

impl BoundViolations {
    fn record(&mut self, excess: f64, tol: f64) {
        if excess > tol {
            self.count += 1;
        }
        self.worst_margin = self.worst_margin.max(excess.max(0.0));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Largest gap between stored and replayed positions (m).
    pub kinematic_residual_position: f64,
    /// Largest gap between stored and replayed airspeeds (m/s).
    pub kinematic_residual_velocity: f64,
    /// Per-sample replay position drift, for diagnosing systematic errors.
    pub position_drift: Vec<f64>,
    pub boundary_residual: f64,
    pub collected_bits: Vec<f64>,
    /// max(0, Q̄_k − Q_k) per buoy.
    pub throughput_deficit: Vec<f64>,
    /// Largest TDMA budget excess or negative share (s).
    pub tdma_violation_max: f64,
    pub speed_bound_violations: BoundViolations,
    pub accel_violations: BoundViolations,
    /// Slots whose airspeed is below the heading-dependent wind requirement.
    pub per_slot_min_airspeed_failures: usize,
    pub per_slot_power: Vec<f64>,
    pub energy_j: f64,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Slot power from the aerodynamic terms at the slot's first sample plus the
/// kinetic-energy change to the next sample, spread over the slot.
fn power(v: Vec2, v_next: Vec2, a: Vec2, tt: f64, problem: &FlightProblem) -> f64 {
    let u = &problem.uav;
    let vv = v.x * v.x + v.y * v.y;
    let s = vv.sqrt();
    let av = a.x * v.x + a.y * v.y;
    let aa = a.x * a.x + a.y * a.y;
    let bank = (aa - av * av / vv) / (u.gravity * u.gravity);
    let kinetic = 0.5 * u.mass * (v_next.x * v_next.x + v_next.y * v_next.y - vv) / tt;
    (u.drag_coeff * s * s * s + u.lift_coeff * (1.0 + bank) / s + kinetic).abs()
}

fn link_rate(q: Vec2, b: Vec2, problem: &FlightProblem) -> f64 {
    let h = problem.uav.altitude;
    let d2 = h * h + (q.x - b.x).powi(2) + (q.y - b.y).powi(2);
    problem.chan.bandwidth * (1.0 + problem.chan.ref_snr / d2).log2()
}

/// Smallest airspeed that keeps ground heading `gamma` flyable in wind
/// `V_w∠β`.
fn slot_requirement(gamma: f64, problem: &FlightProblem) -> f64 {
    let vw = problem.wind.speed();
    let beta = problem.wind.angle();
    // cos(β − γ) > 0 ⇔ the wind has a positive component along the track
    if (beta - gamma).cos() > 1e-12 {
        vw * (beta - gamma).sin().abs()
    } else {
        vw
    }
}

/// Replays `traj`/`sched` against `problem` and grades every constraint.
pub fn validate(
    traj: &Trajectory,
    sched: &Schedule,
    problem: &FlightProblem,
    tol: &Tolerances,
) -> Result<ValidationReport> {
    let slots = traj.accelerations.len();
    if slots == 0
        || traj.positions.len() != slots + 1
        || traj.airspeeds.len() != slots + 1
        || sched.tau.len() != problem.buoys.len()
        || sched.tau.iter().any(|row| row.len() != slots)
    {
        return Err(Error::Dimension(format!(
            "trajectory with {} accelerations, {} positions, {} airspeeds; schedule {}×{:?}; {} buoys",
            slots,
            traj.positions.len(),
            traj.airspeeds.len(),
            sched.tau.len(),
            sched.tau.first().map(Vec::len),
            problem.buoys.len()
        )));
    }
    let tt = traj.slot_duration;
    let w = problem.wind.vector();
    let mut reasons = Vec::new();

    // forward replay from the first sample
    let mut q = traj.positions[0];
    let mut v = traj.airspeeds[0];
    let mut drift = vec![0.0];
    let mut vel_res: f64 = 0.0;
    for n in 0..slots {
        let a = traj.accelerations[n];
        q = Vec2::new(
            q.x + (v.x + w.x) * tt + 0.5 * a.x * tt * tt,
            q.y + (v.y + w.y) * tt + 0.5 * a.y * tt * tt,
        );
        v = Vec2::new(v.x + a.x * tt, v.y + a.y * tt);
        drift.push((q - traj.positions[n + 1]).norm());
        vel_res = vel_res.max((v - traj.airspeeds[n + 1]).norm());
    }
    let pos_res = drift.iter().cloned().fold(0.0, f64::max);
    if pos_res > tol.kinematic || vel_res > tol.kinematic {
        reasons.push(format!(
            "kinematic replay drift {pos_res:.3e} m / {vel_res:.3e} m/s"
        ));
    }

    let first = 0;
    let last = slots;
    let boundary_residual = match problem.boundary {
        BoundaryMode::FixedEndpoints => [
            (traj.positions[first] - problem.start).norm(),
            (traj.airspeeds[first] - problem.start_velocity).norm(),
            (traj.positions[last] - problem.end).norm(),
            (traj.airspeeds[last] - problem.end_velocity).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max),
        BoundaryMode::MatchedVelocity => (traj.positions[first] - problem.start)
            .norm()
            .max((traj.positions[last] - problem.end).norm())
            .max((traj.airspeeds[last] - traj.airspeeds[first]).norm()),
        BoundaryMode::PeriodicLap => (traj.positions[last] - traj.positions[first])
            .norm()
            .max((traj.airspeeds[last] - traj.airspeeds[first]).norm()),
    };
    if boundary_residual > tol.kinematic {
        reasons.push(format!("boundary conditions missed by {boundary_residual:.3e}"));
    }

    let mut tdma: f64 = 0.0;
    for n in 0..slots {
        let mut used = 0.0;
        for row in &sched.tau {
            tdma = tdma.max(-row[n]);
            used += row[n];
        }
        tdma = tdma.max(used - tt);
    }
    if tdma > tol.bounds {
        reasons.push(format!("TDMA budget exceeded by {tdma:.3e} s"));
    }

    let mut collected = Vec::with_capacity(problem.buoys.len());
    let mut deficit = Vec::with_capacity(problem.buoys.len());
    for (k, buoy) in problem.buoys.iter().enumerate() {
        let bits: f64 = (0..slots)
            .map(|n| sched.tau[k][n] * link_rate(traj.positions[n], buoy.position, problem))
            .sum();
        let short = (buoy.demand - bits).max(0.0);
        if short > tol.throughput_relative * buoy.demand {
            reasons.push(format!("buoy {k} short by {short:.6e} bits"));
        }
        collected.push(bits);
        deficit.push(short);
    }

    let v_floor = problem.wind.speed().max(problem.uav.v_stall);
    let mut speed = BoundViolations::default();
    let mut accel = BoundViolations::default();
    let mut slot_failures = 0;
    let mut powers = Vec::with_capacity(slots);
    for n in 0..slots {
        let v = traj.airspeeds[n];
        let s = v.norm();
        speed.record((v_floor - s).max(s - problem.uav.v_max), tol.bounds);
        accel.record(traj.accelerations[n].norm() - problem.uav.a_max, tol.bounds);
        let ground = v + w;
        if ground.norm() > 0.0 {
            let gamma = ground.y.atan2(ground.x);
            if s < slot_requirement(gamma, problem) - tol.bounds {
                slot_failures += 1;
            }
        }
        powers.push(if s > 0.0 {
            power(v, traj.airspeeds[n + 1], traj.accelerations[n], tt, problem)
        } else {
            f64::INFINITY
        });
    }
    let s_end = traj.airspeeds[slots].norm();
    speed.record(s_end - problem.uav.v_max, tol.bounds);
    if speed.count > 0 {
        reasons.push(format!(
            "{} airspeed bound violations (worst {:.3e} m/s)",
            speed.count, speed.worst_margin
        ));
    }
    if accel.count > 0 {
        reasons.push(format!(
            "{} acceleration bound violations (worst {:.3e} m/s²)",
            accel.count, accel.worst_margin
        ));
    }
    if slot_failures > 0 {
        reasons.push(format!("{slot_failures} slots below the wind airspeed requirement"));
    }
    let energy = powers.iter().sum::<f64>() * tt;
    if !energy.is_finite() {
        reasons.push("energy is not finite".into());
    }

    Ok(ValidationReport {
        kinematic_residual_position: pos_res,
        kinematic_residual_velocity: vel_res,
        position_drift: drift,
        boundary_residual,
        collected_bits: collected,
        throughput_deficit: deficit,
        tdma_violation_max: tdma,
        speed_bound_violations: speed,
        accel_violations: accel,
        per_slot_min_airspeed_failures: slot_failures,
        per_slot_power: powers,
        energy_j: energy,
        verdict: if reasons.is_empty() { Verdict::Pass } else { Verdict::Fail },
        reasons,
    })
}
