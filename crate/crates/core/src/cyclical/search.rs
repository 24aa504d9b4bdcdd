//! Grid search for the initial closed pattern.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pattern::{generate_pattern, PatternKind, PatternParams};
use crate::comms::{allocate_time, capacity_bits, rate_table, Allocation, Buoy, ChannelParams, Schedule};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{total_energy, Trajectory, UavParams, Wind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Period grid bounds (s); the grid is geometric.
    pub period_min: f64,
    pub period_max: f64,
    /// l1: period grid points.
    pub period_steps: usize,
    /// l2: radius grid points over (0, V_max·T0/(2π·loops)].
    pub radius_steps: usize,
    /// l3: orientation grid points over [0, 2π) for the 8-shape.
    pub theta_steps: usize,
    /// Zoom-in passes around the incumbent after the coarse grid.
    pub refine_rounds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            period_min: 20.0,
            period_max: 400.0,
            period_steps: 20,
            radius_steps: 15,
            theta_steps: 24,
            refine_rounds: 2,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.period_min > 0.0 && self.period_max >= self.period_min)
            || self.period_steps == 0
            || self.radius_steps == 0
            || self.theta_steps == 0
        {
            return Err(Error::InvalidArgument("pattern search grid is empty".into()));
        }
        Ok(())
    }
}

/// Result of the initial pattern search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialPattern {
    pub params: PatternParams,
    pub trajectory: Trajectory,
    pub schedule: Schedule,
    pub energy: f64,
    pub min_slack: f64,
}

/// `steps` points from `lo` to `hi`, geometrically spaced.
pub fn geometric_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 || hi <= lo {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(1.0 / (steps - 1) as f64);
    (0..steps).map(|i| lo * ratio.powi(i as i32)).collect()
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    period: f64,
    radius: f64,
    theta: f64,
}

struct Candidate {
    cell: Cell,
    params: PatternParams,
    trajectory: Trajectory,
    energy: f64,
}

fn order(a: &Candidate, b: &Candidate) -> Ordering {
    a.energy
        .total_cmp(&b.energy)
        .then(a.cell.period.total_cmp(&b.cell.period))
        .then(a.cell.radius.total_cmp(&b.cell.radius))
        .then(a.cell.theta.total_cmp(&b.cell.theta))
}

fn wrap_2pi(x: f64) -> f64 {
    x.rem_euclid(2.0 * PI)
}

struct Context<'a> {
    kind: PatternKind,
    center: Vec2,
    buoys: &'a [Buoy],
    demands: Vec<f64>,
    wind: &'a Wind,
    chan: &'a ChannelParams,
    uav: &'a UavParams,
    tt: f64,
}

impl Context<'_> {
    fn build(&self, cell: Cell) -> Option<Candidate> {
        let params =
            PatternParams::new(self.kind, self.center, cell.radius, cell.theta, cell.period).ok()?;
        let trajectory = generate_pattern(&params, self.tt, self.wind, self.uav).ok()?;
        let energy = total_energy(&trajectory, self.uav).ok()?;
        Some(Candidate {
            cell,
            params,
            trajectory,
            energy,
        })
    }

    /// Cheapest candidate whose schedule LP succeeds, plus the best slack
    /// seen among the rejected ones.
    fn select(&self, cells: Vec<Cell>) -> Result<(Option<InitialPattern>, f64)> {
        let mut candidates: Vec<Candidate> =
            cells.into_par_iter().filter_map(|c| self.build(c)).collect();
        candidates.sort_by(order);
        let mut best_slack = f64::NEG_INFINITY;
        for cand in candidates {
            let rates = rate_table(&cand.trajectory, self.buoys, self.chan, self.uav.altitude);
            let cap = capacity_bits(&rates, self.tt);
            let short = cap
                .iter()
                .zip(&self.demands)
                .map(|(c, d)| c - d)
                .fold(f64::INFINITY, f64::min);
            if short < 0.0 && short < -1e-6 * self.demands.iter().cloned().fold(1.0, f64::max) {
                best_slack = best_slack.max(short);
                continue;
            }
            match allocate_time(&rates, &self.demands, self.tt)? {
                Allocation::Feasible { schedule, min_slack } => {
                    return Ok((
                        Some(InitialPattern {
                            params: cand.params,
                            trajectory: cand.trajectory,
                            schedule,
                            energy: cand.energy,
                            min_slack,
                        }),
                        best_slack,
                    ))
                }
                Allocation::Infeasible { best_min_slack } => {
                    best_slack = best_slack.max(best_min_slack)
                }
            }
        }
        Ok((None, best_slack))
    }

    fn thetas(&self, steps: usize) -> Vec<f64> {
        match self.kind {
            PatternKind::Circular => vec![0.0],
            PatternKind::EightShape => (0..steps).map(|i| 2.0 * PI * i as f64 / steps as f64).collect(),
        }
    }

    fn radius_max(&self, period: f64) -> f64 {
        self.uav.v_max * period / (2.0 * PI * self.kind.loops())
    }
}

/// Searches periods, radii and (for the 8-shape) orientations for the
/// lowest-energy pattern whose TDMA schedule can meet `per_lap_demands`.
/// Ties are broken by smaller period, then smaller radius.
#[allow(clippy::too_many_arguments)]
pub fn initial_trajectory(
    kind: PatternKind,
    buoys: &[Buoy],
    per_lap_demands: &[f64],
    wind: &Wind,
    chan: &ChannelParams,
    uav: &UavParams,
    cfg: &SearchConfig,
    slot_duration: f64,
) -> Result<InitialPattern> {
    cfg.validate()?;
    let ctx = Context::new(kind, buoys, per_lap_demands, wind, chan, uav, slot_duration)?;
    let periods = geometric_grid(cfg.period_min, cfg.period_max, cfg.period_steps);
    let thetas = ctx.thetas(cfg.theta_steps);
    ctx.search(&periods, &thetas, cfg)
}

/// Best pattern with the period and orientation held fixed; only the radius
/// is searched (coarse grid plus the configured zoom passes).
#[allow(clippy::too_many_arguments)]
pub fn pattern_at_period(
    kind: PatternKind,
    buoys: &[Buoy],
    per_lap_demands: &[f64],
    wind: &Wind,
    chan: &ChannelParams,
    uav: &UavParams,
    cfg: &SearchConfig,
    slot_duration: f64,
    period: f64,
    theta: f64,
) -> Result<InitialPattern> {
    cfg.validate()?;
    let ctx = Context::new(kind, buoys, per_lap_demands, wind, chan, uav, slot_duration)?;
    ctx.search(&[period], &[theta], cfg)
}

impl<'a> Context<'a> {
    fn new(
        kind: PatternKind,
        buoys: &'a [Buoy],
        per_lap_demands: &[f64],
        wind: &'a Wind,
        chan: &'a ChannelParams,
        uav: &'a UavParams,
        tt: f64,
    ) -> Result<Self> {
        if buoys.is_empty() || buoys.len() != per_lap_demands.len() {
            return Err(Error::Dimension("one demand per buoy required".into()));
        }
        if per_lap_demands.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidArgument("demands must be non-negative".into()));
        }
        if !(tt > 0.0) {
            return Err(Error::InvalidArgument("slot duration must be positive".into()));
        }
        let center = buoys.iter().fold(Vec2::ZERO, |acc, b| acc + b.position) / buoys.len() as f64;
        Ok(Self {
            kind,
            center,
            buoys,
            demands: per_lap_demands.to_vec(),
            wind,
            chan,
            uav,
            tt,
        })
    }

    fn search(&self, periods: &[f64], thetas: &[f64], cfg: &SearchConfig) -> Result<InitialPattern> {
        let mut cells = Vec::new();
        for &period in periods {
            let r_max = self.radius_max(period);
            for i in 1..=cfg.radius_steps {
                let radius = r_max * i as f64 / cfg.radius_steps as f64;
                for &theta in thetas {
                    cells.push(Cell { period, radius, theta });
                }
            }
        }
        let (mut best, mut best_slack) = self.select(cells)?;

        let mut period_ratio = if periods.len() > 1 { periods[1] / periods[0] } else { 1.0 };
        let p_max = periods.iter().cloned().fold(0.0, f64::max);
        let mut radius_step = self.radius_max(p_max) / cfg.radius_steps as f64;
        let mut theta_step = if thetas.len() > 1 { thetas[1] - thetas[0] } else { 0.0 };
        for _ in 0..cfg.refine_rounds {
            let Some(inc) = best.clone() else { break };
            let p = inc.params;
            let local_periods = if period_ratio > 1.0 {
                geometric_grid(p.period_t0 / period_ratio, p.period_t0 * period_ratio, 7)
            } else {
                vec![p.period_t0]
            };
            let local_radii: Vec<f64> = (-3..=3)
                .map(|i| p.radius_r + radius_step * i as f64 / 3.0)
                .filter(|r| *r > 0.0)
                .collect();
            let local_thetas: Vec<f64> = if theta_step > 0.0 {
                (-2..=2)
                    .map(|i| wrap_2pi(p.orientation_theta + theta_step * i as f64 / 2.0))
                    .collect()
            } else {
                vec![p.orientation_theta]
            };
            let mut cells = Vec::new();
            for &period in &local_periods {
                for &radius in &local_radii {
                    if radius > self.radius_max(period) {
                        continue;
                    }
                    for &theta in &local_thetas {
                        cells.push(Cell { period, radius, theta });
                    }
                }
            }
            let (found, slack) = self.select(cells)?;
            best_slack = best_slack.max(slack);
            if let Some(f) = found {
                if f.energy < inc.energy {
                    best = Some(f);
                }
            }
            period_ratio = period_ratio.powf(1.0 / 3.0);
            radius_step /= 3.0;
            theta_step /= 2.0;
        }

        best.ok_or_else(|| Error::Infeasible {
            reason: format!(
                "no {} pattern in the search grid meets the per-lap demand (best slack {best_slack:.3e} bits)",
                self.kind.name()
            ),
            achievable_fraction: 0.0,
        })
    }
}
