//! Fixed-wing propulsion model, wind-shifted discrete kinematics and the
//! airspeed rules that depend on the wind regime.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Vec2};

/// Absolute tolerance used for kinematic consistency (m and m/s).
pub const KINEMATIC_TOLERANCE: f64 = 1e-6;

/// Airframe and flight-envelope parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UavParams {
    /// Constant flight altitude H (m).
    pub altitude: f64,
    pub v_max: f64,
    pub v_stall: f64,
    pub a_max: f64,
    /// Coefficient A of the ‖v‖³ parasitic term (kg/m).
    pub drag_coeff: f64,
    /// Coefficient C of the 1/‖v‖ induced term.
    pub lift_coeff: f64,
    /// Airframe mass (kg). Only the kinetic term m·aᵀv uses it.
    pub mass: f64,
    pub gravity: f64,
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            altitude: 100.0,
            v_max: 100.0,
            v_stall: 3.0,
            a_max: 5.0,
            drag_coeff: 9.26e-4,
            lift_coeff: 2250.0,
            mass: 9.65,
            gravity: 9.8,
        }
    }
}

impl UavParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.altitude > 0.0, "altitude must be positive"),
            (self.v_stall > 0.0, "stall speed must be positive"),
            (self.v_stall < self.v_max, "stall speed must be below v_max"),
            (self.a_max > 0.0, "a_max must be positive"),
            (self.drag_coeff > 0.0, "drag coefficient must be positive"),
            (self.lift_coeff > 0.0, "lift coefficient must be positive"),
            (self.mass >= 0.0, "mass must be non-negative"),
            (self.gravity > 0.0, "gravity must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParams(msg.into()));
            }
        }
        Ok(())
    }

    /// Level-flight power at constant airspeed `speed`: A·s³ + C/s.
    pub fn cruise_power(&self, speed: f64) -> f64 {
        self.drag_coeff * speed.powi(3) + self.lift_coeff / speed
    }
}

/// Constant wind `V_w∠β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wind {
    speed: f64,
    angle: f64,
}

impl Wind {
    /// `angle` is the direction the wind blows towards, radians from +x.
    pub fn new(speed: f64, angle: f64) -> Result<Self> {
        if !(speed >= 0.0) || !speed.is_finite() || !angle.is_finite() {
            return Err(Error::InvalidParams(format!(
                "wind speed {speed} / angle {angle} not admissible"
            )));
        }
        Ok(Self {
            speed,
            angle: angle.rem_euclid(TAU),
        })
    }

    pub const fn calm() -> Self {
        Self {
            speed: 0.0,
            angle: 0.0,
        }
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Direction in [0, 2π).
    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn vector(&self) -> Vec2 {
        Vec2::from_polar(self.speed, self.angle)
    }
}

/// Discretised flight plan over `N + 2` sample points.
///
/// `positions` and `airspeeds` hold indices `0..=N+1`; `accelerations`
/// holds `0..=N`, one per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub slot_duration: f64,
    pub positions: Vec<Vec2>,
    pub airspeeds: Vec<Vec2>,
    pub accelerations: Vec<Vec2>,
}

impl Trajectory {
    pub fn new(
        slot_duration: f64,
        positions: Vec<Vec2>,
        airspeeds: Vec<Vec2>,
        accelerations: Vec<Vec2>,
    ) -> Result<Self> {
        let traj = Self {
            slot_duration,
            positions,
            airspeeds,
            accelerations,
        };
        traj.check_shape()?;
        Ok(traj)
    }

    pub fn check_shape(&self) -> Result<()> {
        if !(self.slot_duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "slot duration {} must be positive",
                self.slot_duration
            )));
        }
        let slots = self.accelerations.len();
        if slots == 0 || self.positions.len() != slots + 1 || self.airspeeds.len() != slots + 1 {
            return Err(Error::Dimension(format!(
                "positions {} / airspeeds {} / accelerations {} are not N+2 / N+2 / N+1",
                self.positions.len(),
                self.airspeeds.len(),
                slots
            )));
        }
        let all = self
            .positions
            .iter()
            .chain(&self.airspeeds)
            .chain(&self.accelerations);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite trajectory sample".into()));
        }
        Ok(())
    }

    /// Number of slots, N + 1.
    pub fn slots(&self) -> usize {
        self.accelerations.len()
    }

    /// Flight duration (N + 1)·Tt.
    pub fn duration(&self) -> f64 {
        self.slots() as f64 * self.slot_duration
    }

    pub fn ground_velocity(&self, n: usize, wind: &Wind) -> Vec2 {
        self.airspeeds[n] + wind.vector()
    }

    /// Largest position and velocity mismatch of the discrete kinematics
    /// under `wind`.
    pub fn kinematic_residual(&self, wind: &Wind) -> (f64, f64) {
        let tt = self.slot_duration;
        let mut pos: f64 = 0.0;
        let mut vel: f64 = 0.0;
        for n in 0..self.slots() {
            let (q, v) = propagate(
                self.positions[n],
                self.airspeeds[n],
                self.accelerations[n],
                wind,
                tt,
            );
            pos = pos.max((q - self.positions[n + 1]).norm());
            vel = vel.max((v - self.airspeeds[n + 1]).norm());
        }
        (pos, vel)
    }

    pub fn is_consistent(&self, wind: &Wind) -> bool {
        let (p, v) = self.kinematic_residual(wind);
        p <= KINEMATIC_TOLERANCE && v <= KINEMATIC_TOLERANCE
    }

    /// Builds a kinematically exact trajectory from ground-velocity samples
    /// v_e[0..=N+1]: airspeeds are v_e − v_w and each slot's acceleration is
    /// the finite difference of consecutive samples.
    pub fn from_ground_velocities(
        start: Vec2,
        ground: &[Vec2],
        wind: &Wind,
        slot_duration: f64,
    ) -> Result<Self> {
        if ground.len() < 2 {
            return Err(Error::Dimension("need at least two velocity samples".into()));
        }
        let w = wind.vector();
        let airspeeds: Vec<Vec2> = ground.iter().map(|&g| g - w).collect();
        let accelerations: Vec<Vec2> = ground
            .windows(2)
            .map(|p| (p[1] - p[0]) / slot_duration)
            .collect();
        let mut traj = Self {
            slot_duration,
            positions: vec![start; ground.len()],
            airspeeds,
            accelerations,
        };
        traj.repropagate(wind);
        traj.check_shape()?;
        Ok(traj)
    }

    /// Adds the minimum-norm acceleration correction δa[n] = λ1 + λ2·(N − n + ½)
    /// (per axis) that moves the terminal sample onto `q_target` and, when
    /// given, `v_target`, then re-propagates. The first sample is left untouched.
    pub fn steer_terminal(&mut self, q_target: Vec2, v_target: Option<Vec2>, wind: &Wind) {
        let tt = self.slot_duration;
        let slots = self.slots();
        if slots < 2 {
            return;
        }
        self.repropagate(wind);
        let dq = q_target - self.positions[slots];
        let big_n = (slots - 1) as f64;
        let w: Vec<f64> = (0..slots).map(|n| big_n - n as f64 + 0.5).collect();
        let s0 = slots as f64;
        let s1: f64 = w.iter().sum();
        let s2: f64 = w.iter().map(|x| x * x).sum();
        let det = s0 * s2 - s1 * s1;
        // Tt·Σδa = dv, Tt²·Σ w_n·δa_n = dq
        let solve = |ev: f64, eq: f64| {
            let r1 = ev / tt;
            let r2 = eq / (tt * tt);
            ((r1 * s2 - r2 * s1) / det, (s0 * r2 - s1 * r1) / det)
        };
        let ((lx1, lx2), (ly1, ly2)) = match v_target {
            Some(v) => {
                let dv = v - self.airspeeds[slots];
                (solve(dv.x, dq.x), solve(dv.y, dq.y))
            }
            None => {
                let c = 1.0 / (tt * tt * s2);
                ((0.0, dq.x * c), (0.0, dq.y * c))
            }
        };
        for (n, wn) in w.iter().enumerate() {
            self.accelerations[n] += Vec2::new(lx1 + lx2 * wn, ly1 + ly2 * wn);
        }
        self.repropagate(wind);
    }

    /// Rebuilds positions and airspeeds by forward propagation from the
    /// first sample, keeping the accelerations.
    pub fn repropagate(&mut self, wind: &Wind) {
        let tt = self.slot_duration;
        for n in 0..self.slots() {
            let (q, v) = propagate(
                self.positions[n],
                self.airspeeds[n],
                self.accelerations[n],
                wind,
                tt,
            );
            self.positions[n + 1] = q;
            self.airspeeds[n + 1] = v;
        }
    }
}

/// Instantaneous propulsion power, evaluated literally including the outer
/// absolute value and the kinetic term m·aᵀv.
pub fn propulsion_power(v: Vec2, a: Vec2, params: &UavParams) -> Result<f64> {
    let speed_sq = v.norm_sq();
    if !(speed_sq > 0.0) {
        return Err(Error::ZeroAirspeed { slot: 0 });
    }
    let speed = speed_sq.sqrt();
    let along = a.dot(v);
    let lateral = a.norm_sq() - along * along / speed_sq;
    let g2 = params.gravity * params.gravity;
    let inner = params.drag_coeff * speed.powi(3)
        + params.lift_coeff / speed * (1.0 + lateral / g2)
        + params.mass * along;
    Ok(inner.abs())
}

/// Airspeed minimising steady level-flight power A·s³ + C/s, clamped to
/// the stall/maximum speed envelope.
pub fn steady_speed_optimum(params: &UavParams) -> f64 {
    let free = (params.lift_coeff / (3.0 * params.drag_coeff)).powf(0.25);
    free.clamp(params.v_stall, params.v_max)
}

/// Power charged to one slot of length `tt` that starts at airspeed `v` and
/// holds acceleration `a`.
///
/// Drag, lift and load factor are taken at `v`. The kinetic term uses the
/// slot-average airspeed v + ½a·Tt, so its sum over slots is exactly
/// ½m(‖v_end‖² − ‖v_start‖²). Evaluated at `v` it would be short by
/// ½m‖a‖²·Tt per slot, which a turning trajectory collects every slot.
pub fn slot_power(v: Vec2, a: Vec2, tt: f64, params: &UavParams) -> Result<f64> {
    let speed_sq = v.norm_sq();
    if !(speed_sq > 0.0) {
        return Err(Error::ZeroAirspeed { slot: 0 });
    }
    let speed = speed_sq.sqrt();
    let along = a.dot(v);
    let lateral = a.norm_sq() - along * along / speed_sq;
    let g2 = params.gravity * params.gravity;
    let inner = params.drag_coeff * speed.powi(3)
        + params.lift_coeff / speed * (1.0 + lateral / g2)
        + params.mass * (along + 0.5 * tt * a.norm_sq());
    Ok(inner.abs())
}

/// Per-slot propulsion power of a trajectory, in watts.
pub fn slot_powers(traj: &Trajectory, params: &UavParams) -> Result<Vec<f64>> {
    (0..traj.slots())
        .map(|n| {
            slot_power(traj.airspeeds[n], traj.accelerations[n], traj.slot_duration, params)
                .map_err(|_| Error::ZeroAirspeed { slot: n })
        })
        .collect()
}

/// Total propulsion energy Σ P[n]·Tt over slots 0..=N.
pub fn total_energy(traj: &Trajectory, params: &UavParams) -> Result<f64> {
    Ok(slot_powers(traj, params)?.iter().sum::<f64>() * traj.slot_duration)
}

/// One slot of wind-shifted motion. The airspeed update does not see the wind.
pub fn propagate(q: Vec2, v: Vec2, a: Vec2, wind: &Wind, tt: f64) -> (Vec2, Vec2) {
    let q_next = q + (v + wind.vector()) * tt + a * (0.5 * tt * tt);
    let v_next = v + a * tt;
    (q_next, v_next)
}

/// Effective minimum airspeed V* = max(V_w, V_s).
pub fn min_airspeed(wind: &Wind, params: &UavParams) -> f64 {
    wind.speed().max(params.v_stall)
}

/// Slot-wise airspeed requirement: `V_w·|sin(β − γ)|` under tailwind,
/// `V_w` under headwind. A crosswind exactly at 90° counts as headwind.
pub fn required_slot_airspeed(ground_angle: f64, wind: &Wind) -> f64 {
    let diff = wrap_angle(wind.angle() - ground_angle);
    if diff.abs() < FRAC_PI_2 {
        wind.speed() * diff.sin().abs()
    } else {
        wind.speed()
    }
}

pub fn check_slot_airspeed(v: Vec2, ground_angle: f64, wind: &Wind) -> bool {
    v.norm() >= required_slot_airspeed(ground_angle, wind)
}
