//! Line-of-sight channel, achievable rate, collected throughput and the TDMA
//! time-allocation linear program.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::Trajectory;

/// Relative tolerance on LP constraint satisfaction.
pub const LP_TOLERANCE: f64 = 1e-6;

/// Internal LP units: Mbit and Mbit/s keep coefficients near unity.
const MEGA: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Bandwidth B (Hz).
    pub bandwidth: f64,
    /// Reference SNR γ0 = P0·β0/(σ²·Γ) at 1 m, linear.
    pub ref_snr: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::from_db(1e6, 70.0)
    }
}

impl ChannelParams {
    pub fn from_db(bandwidth: f64, ref_snr_db: f64) -> Self {
        Self {
            bandwidth,
            ref_snr: 10f64.powf(ref_snr_db / 10.0),
        }
    }

    /// γ0 assembled from transmit power, reference gain, noise power and
    /// the capacity gap.
    pub fn from_link_budget(
        bandwidth: f64,
        tx_power: f64,
        ref_gain: f64,
        noise_power: f64,
        capacity_gap: f64,
    ) -> Self {
        Self {
            bandwidth,
            ref_snr: tx_power * ref_gain / (noise_power * capacity_gap),
        }
    }

    pub fn ref_snr_db(&self) -> f64 {
        10.0 * self.ref_snr.log10()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !(self.ref_snr > 0.0) {
            return Err(Error::InvalidParams(
                "bandwidth and reference SNR must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Buoy {
    pub position: Vec2,
    /// Bits still to be collected, Q̄_k.
    pub demand: f64,
}

impl Buoy {
    pub fn new(position: Vec2, demand: f64) -> Self {
        Self { position, demand }
    }
}

/// TDMA allocation τ_k[n] in seconds, one row per buoy, one column per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub tau: Vec<Vec<f64>>,
}

impl Schedule {
    pub fn zeros(buoys: usize, slots: usize) -> Self {
        Self {
            tau: vec![vec![0.0; slots]; buoys],
        }
    }

    pub fn buoys(&self) -> usize {
        self.tau.len()
    }

    pub fn slots(&self) -> usize {
        self.tau.first().map_or(0, Vec::len)
    }

    /// Largest amount by which Σ_k τ_k[n] exceeds `slot_duration`, and the
    /// most negative entry (reported as a positive violation).
    pub fn violations(&self, slot_duration: f64) -> (f64, f64) {
        let mut over: f64 = 0.0;
        let mut negative: f64 = 0.0;
        for n in 0..self.slots() {
            let total: f64 = self.tau.iter().map(|row| row[n]).sum();
            over = over.max(total - slot_duration);
            for row in &self.tau {
                negative = negative.max(-row[n]);
            }
        }
        (over, negative)
    }
}

/// Achievable rate B·log2(1 + γ0/(H² + ‖q − b‖²)) in bit/s.
pub fn rate(q: Vec2, buoy: &Buoy, chan: &ChannelParams, altitude: f64) -> f64 {
    rate_at_sq_distance((q - buoy.position).norm_sq(), chan, altitude)
}

/// Rate as a function of the squared horizontal distance `s`.
pub fn rate_at_sq_distance(s: f64, chan: &ChannelParams, altitude: f64) -> f64 {
    chan.bandwidth * (1.0 + chan.ref_snr / (altitude * altitude + s)).log2()
}

/// Derivative of [`rate_at_sq_distance`] with respect to `s` (negative).
pub fn rate_slope_sq_distance(s: f64, chan: &ChannelParams, altitude: f64) -> f64 {
    let d = altitude * altitude + s;
    -chan.bandwidth / std::f64::consts::LN_2 * chan.ref_snr / (d * (d + chan.ref_snr))
}

/// Rates R_k[n] for slots n = 0..=N, one row per buoy.
pub fn rate_table(
    traj: &Trajectory,
    buoys: &[Buoy],
    chan: &ChannelParams,
    altitude: f64,
) -> Vec<Vec<f64>> {
    buoys
        .iter()
        .map(|b| {
            traj.positions[..traj.slots()]
                .iter()
                .map(|&q| rate(q, b, chan, altitude))
                .collect()
        })
        .collect()
}

/// Bits collected per buoy, Q_k = Σ_n τ_k[n]·R_k[n].
pub fn collected_bits(
    traj: &Trajectory,
    sched: &Schedule,
    buoys: &[Buoy],
    chan: &ChannelParams,
    altitude: f64,
) -> Result<Vec<f64>> {
    if sched.buoys() != buoys.len() {
        return Err(Error::Dimension(format!(
            "schedule has {} rows for {} buoys",
            sched.buoys(),
            buoys.len()
        )));
    }
    if sched.tau.iter().any(|row| row.len() != traj.slots()) {
        return Err(Error::Dimension(format!(
            "schedule rows must have {} slots",
            traj.slots()
        )));
    }
    Ok(buoys
        .iter()
        .zip(&sched.tau)
        .map(|(b, row)| {
            row.iter()
                .zip(&traj.positions)
                .map(|(&t, &q)| t * rate(q, b, chan, altitude))
                .sum()
        })
        .collect())
}

/// Outcome of the time-allocation LP.
#[derive(Debug, Clone, PartialEq)]
pub enum Allocation {
    Feasible {
        schedule: Schedule,
        /// min_k (Q_k − Q̄_k) in bits; non-negative up to the LP tolerance.
        min_slack: f64,
    },
    Infeasible {
        /// Best achievable min_k (Q_k − Q̄_k), negative.
        best_min_slack: f64,
    },
}

impl Allocation {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Allocation::Feasible { .. })
    }

    pub fn min_slack(&self) -> f64 {
        match self {
            Allocation::Feasible { min_slack, .. } => *min_slack,
            Allocation::Infeasible { best_min_slack } => *best_min_slack,
        }
    }

    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            Allocation::Feasible { schedule, .. } => Some(schedule),
            Allocation::Infeasible { .. } => None,
        }
    }
}

/// Finds τ satisfying the per-slot TDMA budget and every demand, choosing the
/// allocation that maximises the smallest surplus min_k (Q_k − Q̄_k).
pub fn schedule_feasibility(
    traj: &Trajectory,
    buoys: &[Buoy],
    chan: &ChannelParams,
    altitude: f64,
) -> Result<Allocation> {
    let rates = rate_table(traj, buoys, chan, altitude);
    let demands: Vec<f64> = buoys.iter().map(|b| b.demand).collect();
    allocate_time(&rates, &demands, traj.slot_duration)
}

fn demand_tolerance(demands: &[f64]) -> f64 {
    LP_TOLERANCE * demands.iter().cloned().fold(1.0, f64::max)
}

/// Upper bound on Q_k with the whole of every slot given to buoy k.
pub fn capacity_bits(rates: &[Vec<f64>], slot_duration: f64) -> Vec<f64> {
    rates
        .iter()
        .map(|row| row.iter().sum::<f64>() * slot_duration)
        .collect()
}

/// Max-min-surplus allocation for a precomputed rate table (bit/s).
pub fn allocate_time(rates: &[Vec<f64>], demands: &[f64], slot_duration: f64) -> Result<Allocation> {
    let k = rates.len();
    if demands.len() != k {
        return Err(Error::Dimension(format!(
            "{} demand entries for {} rate rows",
            demands.len(),
            k
        )));
    }
    if k == 0 {
        return Ok(Allocation::Feasible {
            schedule: Schedule { tau: Vec::new() },
            min_slack: f64::INFINITY,
        });
    }
    let slots = rates[0].len();
    if rates.iter().any(|r| r.len() != slots) {
        return Err(Error::Dimension("ragged rate table".into()));
    }
    if demands.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidArgument("demands must be non-negative".into()));
    }

    // buoys with nothing to send get no airtime
    let active: Vec<usize> = (0..k).filter(|&i| demands[i] > 0.0).collect();
    if active.is_empty() {
        return Ok(Allocation::Feasible {
            schedule: Schedule::zeros(k, slots),
            min_slack: 0.0,
        });
    }

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let slack = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let tau: Vec<Vec<_>> = (0..k)
        .map(|i| {
            let cap = if demands[i] > 0.0 { slot_duration } else { 0.0 };
            (0..slots).map(|_| lp.add_var(0.0, (0.0, cap))).collect()
        })
        .collect();
    if k > 1 {
        for n in 0..slots {
            let row: Vec<_> = (0..k).map(|i| (tau[i][n], 1.0)).collect();
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, slot_duration);
        }
    }
    for &i in &active {
        let mut row: Vec<_> = (0..slots)
            .filter(|&n| rates[i][n] > 0.0)
            .map(|n| (tau[i][n], rates[i][n] / MEGA))
            .collect();
        row.push((slack, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, demands[i] / MEGA);
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::Solver(format!("time allocation LP: {e}")))?;

    let mut schedule = Schedule::zeros(k, slots);
    for i in 0..k {
        for n in 0..slots {
            schedule.tau[i][n] = solution[tau[i][n]].clamp(0.0, slot_duration);
        }
    }
    if k > 1 {
        // Remove simplex round-off from the per-slot budget.
        for n in 0..slots {
            let total: f64 = (0..k).map(|i| schedule.tau[i][n]).sum();
            if total > slot_duration {
                let scale = slot_duration / total;
                for i in 0..k {
                    schedule.tau[i][n] *= scale;
                }
            }
        }
    }
    let min_slack = (0..k)
        .map(|i| {
            let got: f64 = (0..slots).map(|n| schedule.tau[i][n] * rates[i][n]).sum();
            got - demands[i]
        })
        .fold(f64::INFINITY, f64::min);

    if min_slack >= -demand_tolerance(demands) {
        Ok(Allocation::Feasible { schedule, min_slack })
    } else {
        Ok(Allocation::Infeasible {
            best_min_slack: min_slack,
        })
    }
}

/// Largest λ ∈ [0, 1] such that demands λ·Q̄ admit a feasible allocation.
pub fn achievable_fraction(rates: &[Vec<f64>], demands: &[f64], slot_duration: f64) -> Result<f64> {
    let k = rates.len();
    if demands.iter().all(|&d| d <= 0.0) || k == 0 {
        return Ok(1.0);
    }
    let slots = rates[0].len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let lambda = lp.add_var(1.0, (0.0, 1.0));
    let tau: Vec<Vec<_>> = (0..k)
        .map(|_| {
            (0..slots)
                .map(|_| lp.add_var(0.0, (0.0, slot_duration)))
                .collect()
        })
        .collect();
    for n in 0..slots {
        let row: Vec<_> = (0..k).map(|i| (tau[i][n], 1.0)).collect();
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, slot_duration);
    }
    for i in 0..k {
        let mut row: Vec<_> = (0..slots).map(|n| (tau[i][n], rates[i][n] / MEGA)).collect();
        row.push((lambda, -demands[i] / MEGA));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::Solver(format!("demand scaling LP: {e}")))?;
    Ok(solution[lambda])
}
