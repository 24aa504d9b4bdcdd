//! Point-to-point flights: the constant-airspeed straight-line baseline and
//! the SCA one-flight design with its starting-trajectory search.

use std::f64::consts::PI;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::config::OneFlightConfig;
use crate::comms::{allocate_time, capacity_bits, rate_table, Allocation, Buoy, ChannelParams, Schedule};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{min_airspeed, total_energy, Trajectory, UavParams, Wind};
use crate::sca::{solve_p, BoundaryMode, FlightProblem, ScaConfig, Solution};

/// Everything a point-to-point flight needs except its duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightSetup {
    pub uav: UavParams,
    pub chan: ChannelParams,
    pub buoys: Vec<Buoy>,
    pub wind: Wind,
    pub start: Vec2,
    pub end: Vec2,
    pub start_velocity: Option<Vec2>,
    pub end_velocity: Option<Vec2>,
    pub slot_duration: f64,
}

impl FlightSetup {
    pub fn distance(&self) -> f64 {
        self.start.distance(self.end)
    }

    fn direction(&self) -> Result<Vec2> {
        let d = self.end - self.start;
        if !(d.norm() > 0.0) {
            return Err(Error::InvalidArgument("start and end points coincide".into()));
        }
        Ok(d / d.norm())
    }

    fn demands(&self) -> Vec<f64> {
        self.buoys.iter().map(|b| b.demand).collect()
    }

    /// Problem over `init.slots()` slots. Without configured end velocities
    /// the flight must end with the velocity it started with.
    pub fn problem(&self, init: &Trajectory) -> FlightProblem {
        let pinned = self.start_velocity.is_some() || self.end_velocity.is_some();
        FlightProblem {
            uav: self.uav,
            chan: self.chan,
            buoys: self.buoys.clone(),
            wind: self.wind,
            start: self.start,
            end: self.end,
            start_velocity: self.start_velocity.unwrap_or(init.airspeeds[0]),
            end_velocity: self.end_velocity.unwrap_or(init.airspeeds[0]),
            slot_duration: self.slot_duration,
            slot_count: init.slots() - 1,
            boundary: if pinned {
                BoundaryMode::FixedEndpoints
            } else {
                BoundaryMode::MatchedVelocity
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub airspeed: f64,
    pub ground_speed: f64,
    pub duration: f64,
    pub trajectory: Trajectory,
    pub schedule: Schedule,
    pub energy: f64,
}

/// Ground speed along unit direction `d` for airspeed magnitude `s`, or
/// `None` if the wind cannot be compensated.
fn ground_speed_for(s: f64, d: Vec2, w: Vec2) -> Option<f64> {
    let along = w.dot(d);
    let cross = w.dot(d.perp());
    let disc = s * s - cross * cross;
    if disc < 0.0 {
        return None;
    }
    let g = along + disc.sqrt();
    (g > 0.0).then_some(g)
}

/// Straight constant-velocity flight from start to end over `slots` slots.
fn straight_line(setup: &FlightSetup, slots: usize) -> Result<Trajectory> {
    let d = setup.direction()?;
    let tt = setup.slot_duration;
    let ground = d * (setup.distance() / (slots as f64 * tt));
    let air = ground - setup.wind.vector();
    let mut traj = Trajectory {
        slot_duration: tt,
        positions: vec![setup.start; slots + 1],
        airspeeds: vec![air; slots + 1],
        accelerations: vec![Vec2::ZERO; slots],
    };
    traj.repropagate(&setup.wind);
    traj.positions[slots] = setup.end;
    Ok(traj)
}

/// Straight-line flight at the cheapest constant airspeed in [V*, V_max]
/// whose schedule meets every demand. The mission time follows from the
/// airspeed; it is searched on whole slots so the flight ends exactly at qF.
pub fn run_baseline_search(setup: &FlightSetup) -> Result<BaselineResult> {
    let d = setup.direction()?;
    let w = setup.wind.vector();
    let tt = setup.slot_duration;
    let dist = setup.distance();
    let v_min = min_airspeed(&setup.wind, &setup.uav);
    let g_hi = ground_speed_for(setup.uav.v_max, d, w)
        .ok_or_else(|| Error::Infeasible {
            reason: "wind cannot be compensated along the straight path".into(),
            achievable_fraction: 0.0,
        })?;
    let g_lo = ground_speed_for(v_min, d, w).unwrap_or(1e-3).max(1e-3);
    let m_lo = ((dist / (g_hi * tt)).ceil() as usize).max(1);
    let m_hi = ((dist / (g_lo * tt)).floor() as usize).min(m_lo + 200_000);

    let mut cells: Vec<(f64, usize, f64)> = Vec::new();
    for m in m_lo..=m_hi.max(m_lo) {
        let g = dist / (m as f64 * tt);
        let s = (d * g - w).norm();
        if s < v_min - 1e-9 || s > setup.uav.v_max + 1e-9 {
            continue;
        }
        let energy = setup.uav.cruise_power(s) * m as f64 * tt;
        cells.push((energy, m, s));
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let demands = setup.demands();
    let mut best_fraction: f64 = 0.0;
    for (energy, m, s) in cells {
        let traj = straight_line(setup, m)?;
        let rates = rate_table(&traj, &setup.buoys, &setup.chan, setup.uav.altitude);
        let cap = capacity_bits(&rates, tt);
        if cap.iter().zip(&demands).any(|(c, q)| c < q) {
            let frac = cap
                .iter()
                .zip(&demands)
                .filter(|(_, q)| **q > 0.0)
                .map(|(c, q)| c / q)
                .fold(f64::INFINITY, f64::min);
            best_fraction = best_fraction.max(frac.min(1.0));
            continue;
        }
        if let Allocation::Feasible { schedule, .. } = allocate_time(&rates, &demands, tt)? {
            let energy_literal = total_energy(&traj, &setup.uav)?;
            debug!("baseline: {m} slots, airspeed {s:.3} m/s, E={energy:.1} J");
            return Ok(BaselineResult {
                airspeed: s,
                ground_speed: dist / (m as f64 * tt),
                duration: m as f64 * tt,
                trajectory: traj,
                schedule,
                energy: energy_literal,
            });
        }
    }
    Err(Error::Infeasible {
        reason: "no constant airspeed meets the demand along the straight path".into(),
        achievable_fraction: best_fraction,
    })
}

/// Straight line with `loops` full circles of radius `radius` inserted where
/// the path passes closest to the buoys' centroid, flown at constant ground
/// speed over `slots` slots.
pub fn loiter_path(
    setup: &FlightSetup,
    slots: usize,
    loops: usize,
    radius: f64,
) -> Result<Trajectory> {
    if loops == 0 {
        return straight_line(setup, slots);
    }
    let d = setup.direction()?;
    let dist = setup.distance();
    let tt = setup.slot_duration;
    let centroid = setup
        .buoys
        .iter()
        .fold(Vec2::ZERO, |acc, b| acc + b.position)
        / setup.buoys.len().max(1) as f64;
    let along = (centroid - setup.start).dot(d).clamp(0.0, dist);
    let side = if (centroid - setup.start).dot(d.perp()) < 0.0 { -1.0 } else { 1.0 };
    let arc = 2.0 * PI * radius * loops as f64;
    let total = dist + arc;
    let speed = total / (slots as f64 * tt);

    let tangent = |s: f64| -> Vec2 {
        if s <= along || s >= along + arc {
            d
        } else {
            d.rotate(side * (s - along) / radius)
        }
    };
    let mut ground: Vec<Vec2> = (0..=slots)
        .map(|n| tangent(speed * n as f64 * tt) * speed)
        .collect();
    if let Some(v0) = setup.start_velocity {
        ground[0] = v0 + setup.wind.vector();
    }
    if let Some(vf) = setup.end_velocity {
        ground[slots] = vf + setup.wind.vector();
    }
    let mut traj = Trajectory::from_ground_velocities(setup.start, &ground, &setup.wind, tt)?;
    let v_end = setup.end_velocity.unwrap_or(traj.airspeeds[0]);
    traj.steer_terminal(setup.end, Some(v_end), &setup.wind);
    Ok(traj)
}

fn within_envelope(traj: &Trajectory, setup: &FlightSetup) -> bool {
    let v_min = min_airspeed(&setup.wind, &setup.uav);
    let tol = 1e-9;
    traj.airspeeds[..traj.slots()]
        .iter()
        .all(|v| v.norm() >= v_min - tol && v.norm() <= setup.uav.v_max + tol)
        && traj.airspeeds[traj.slots()].norm() <= setup.uav.v_max + tol
        && traj
            .accelerations
            .iter()
            .all(|a| a.norm() <= setup.uav.a_max + tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartCandidate {
    pub duration: f64,
    pub loops: usize,
    pub radius: f64,
    pub energy: f64,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
    #[serde(skip)]
    pub schedule: Option<Schedule>,
}

/// Cheapest feasible starting trajectory for each mission time in
/// `durations`, over the loiter family in `cfg`.
pub fn start_candidates(
    setup: &FlightSetup,
    durations: &[f64],
    cfg: &OneFlightConfig,
) -> Result<Vec<StartCandidate>> {
    let tt = setup.slot_duration;
    let demands = setup.demands();
    let mut out = Vec::new();
    for &duration in durations {
        let slots = ((duration / tt).round() as usize).max(2);
        let mut shapes: Vec<StartCandidate> = Vec::new();
        for loops in 0..=cfg.max_loops {
            let radii: &[f64] = if loops == 0 { &[0.0] } else { &cfg.loop_radii };
            for &radius in radii {
                let Ok(traj) = loiter_path(setup, slots, loops, radius) else { continue };
                if !within_envelope(&traj, setup) {
                    continue;
                }
                let Ok(energy) = total_energy(&traj, &setup.uav) else { continue };
                shapes.push(StartCandidate {
                    duration: slots as f64 * tt,
                    loops,
                    radius,
                    energy,
                    trajectory: Some(traj),
                    schedule: None,
                });
            }
        }
        shapes.sort_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then(a.loops.cmp(&b.loops))
                .then(a.radius.total_cmp(&b.radius))
        });
        for mut cand in shapes {
            let traj = cand.trajectory.as_ref().expect("built above");
            let rates = rate_table(traj, &setup.buoys, &setup.chan, setup.uav.altitude);
            if capacity_bits(&rates, tt).iter().zip(&demands).any(|(c, q)| c < q) {
                continue;
            }
            if let Allocation::Feasible { schedule, .. } = allocate_time(&rates, &demands, tt)? {
                cand.schedule = Some(schedule);
                out.push(cand);
                break;
            }
        }
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.duration.total_cmp(&b.duration)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneFlightResult {
    pub problem: FlightProblem,
    pub solution: Solution,
    pub start: StartCandidate,
    /// Every starting point that was refined, with its final energy.
    pub tried: Vec<(StartCandidate, f64)>,
}

/// Mission times to try: the configured one, or multiples of the
/// baseline's mission time.
pub fn candidate_durations(
    setup: &FlightSetup,
    fixed: Option<f64>,
    cfg: &OneFlightConfig,
) -> Result<Vec<f64>> {
    if let Some(t) = fixed {
        return Ok(vec![t]);
    }
    let reference = match run_baseline_search(setup) {
        Ok(b) => b.duration,
        Err(_) => {
            // the straight line cannot carry the demand at any speed; scale
            // from the time needed at the slowest ground speed instead
            let d = setup.direction()?;
            let v_min = min_airspeed(&setup.wind, &setup.uav);
            let g = ground_speed_for(v_min.max(setup.uav.v_stall), d, setup.wind.vector())
                .unwrap_or(setup.uav.v_stall);
            setup.distance() / g
        }
    };
    Ok(cfg.duration_factors.iter().map(|f| f * reference).collect())
}

/// SCA design of a single flight from start to end.
pub fn run_one_flight_search(
    setup: &FlightSetup,
    fixed_duration: Option<f64>,
    cfg: &OneFlightConfig,
    sca: &ScaConfig,
) -> Result<OneFlightResult> {
    let durations = candidate_durations(setup, fixed_duration, cfg)?;
    let starts = start_candidates(setup, &durations, cfg)?;
    if starts.is_empty() {
        // report how far the plain straight line falls short
        let slots = ((durations[0] / setup.slot_duration).round() as usize).max(2);
        let traj = straight_line(setup, slots)?;
        let rates = rate_table(&traj, &setup.buoys, &setup.chan, setup.uav.altitude);
        let frac = crate::comms::achievable_fraction(&rates, &setup.demands(), setup.slot_duration)
            .unwrap_or(0.0);
        return Err(Error::Infeasible {
            reason: "no starting trajectory in the loiter family meets the demand".into(),
            achievable_fraction: frac,
        });
    }

    let mut best: Option<OneFlightResult> = None;
    let mut tried = Vec::new();
    let mut last_err = None;
    for start in starts.into_iter().take(cfg.init_candidates) {
        let traj = start.trajectory.clone().expect("candidate trajectory");
        let sched = start.schedule.clone().expect("candidate schedule");
        let problem = setup.problem(&traj);
        match solve_p(&problem, (&traj, &sched), sca) {
            Ok(sol) => {
                info!(
                    "one-flight T={:.1} s loops={} r={:.0}: start {:.1} J → {:.1} J",
                    start.duration, start.loops, start.radius, start.energy, sol.energy
                );
                tried.push((start.clone(), sol.energy));
                if best.as_ref().map_or(true, |b| sol.energy < b.solution.energy) {
                    best = Some(OneFlightResult {
                        problem,
                        solution: sol,
                        start,
                        tried: Vec::new(),
                    });
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(mut b) => {
            b.tried = tried;
            Ok(b)
        }
        None => Err(last_err.unwrap_or_else(|| Error::Solver("no start refined".into()))),
    }
}
