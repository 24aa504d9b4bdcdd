use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{min_airspeed, Trajectory, UavParams, Wind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Circular,
    EightShape,
}

impl PatternKind {
    /// Circles flown per period.
    pub fn loops(self) -> f64 {
        match self {
            PatternKind::Circular => 1.0,
            PatternKind::EightShape => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Circular => "circular",
            PatternKind::EightShape => "eight_shape",
        }
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circular" => Ok(PatternKind::Circular),
            "eight_shape" | "eight-shape" | "8" => Ok(PatternKind::EightShape),
            other => Err(Error::InvalidArgument(format!("unknown pattern kind {other:?}"))),
        }
    }
}

/// A constant-ground-speed closed pattern.
///
/// The 8-shape is two tangent circles meeting at `center`: the lobe centred
/// at `center − r·u` is flown counter-clockwise first, then the lobe at
/// `center + r·u` clockwise, where `u` points along `orientation_theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternParams {
    pub kind: PatternKind,
    pub center: Vec2,
    pub radius_r: f64,
    pub orientation_theta: f64,
    pub ground_speed_v: f64,
    pub period_t0: f64,
}

impl PatternParams {
    /// Derives the ground speed from radius and period.
    pub fn new(kind: PatternKind, center: Vec2, radius: f64, theta: f64, period: f64) -> Result<Self> {
        if !(radius > 0.0 && period > 0.0) || !radius.is_finite() || !period.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "pattern radius {radius} and period {period} must be positive"
            )));
        }
        Ok(Self {
            kind,
            center,
            radius_r: radius,
            orientation_theta: theta,
            ground_speed_v: kind.loops() * 2.0 * PI * radius / period,
            period_t0: period,
        })
    }

    /// Same shape flown over a different period.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        Self::new(self.kind, self.center, self.radius_r, self.orientation_theta, period)
    }

    pub fn validate(&self, uav: &UavParams) -> Result<()> {
        let lhs = 2.0 * PI * self.radius_r * self.kind.loops();
        let rhs = self.ground_speed_v * self.period_t0;
        if (lhs - rhs).abs() > 1e-9 * lhs.abs().max(rhs.abs()) {
            return Err(Error::InvalidArgument(format!(
                "pattern perimeter {lhs} inconsistent with V·T0 = {rhs}"
            )));
        }
        if !(self.ground_speed_v > 0.0 && self.ground_speed_v <= uav.v_max) {
            return Err(Error::InvalidArgument(format!(
                "pattern ground speed {} outside (0, {}]",
                self.ground_speed_v, uav.v_max
            )));
        }
        Ok(())
    }

    /// Unit vector along the 8-shape axis.
    pub fn axis(&self) -> Vec2 {
        Vec2::from_polar(1.0, self.orientation_theta)
    }
}

/// Number of slots a pattern of period `t0` occupies: round(T0/Tt), rounded
/// up to an even count for the 8-shape so both lobes get equal slots.
pub fn pattern_slots(kind: PatternKind, t0: f64, tt: f64) -> usize {
    let raw = (t0 / tt).round().max(1.0) as usize;
    match kind {
        PatternKind::Circular => raw.max(3),
        PatternKind::EightShape => (raw + raw % 2).max(6),
    }
}

/// Ground positions and ground velocities at the N + 2 sample points.
fn ground_samples(p: &PatternParams, slots: usize, tt: f64) -> (Vec<Vec2>, Vec<Vec2>) {
    let r = p.radius_r;
    let mut pos = Vec::with_capacity(slots + 1);
    let mut vel = Vec::with_capacity(slots + 1);
    match p.kind {
        PatternKind::Circular => {
            let step = 2.0 * PI / slots as f64;
            // chord-consistent speed: positions stay exactly on the circle
            let speed = 2.0 * r * (step / 2.0).tan() / tt;
            for n in 0..=slots {
                let phi = p.orientation_theta + step * n as f64;
                pos.push(p.center + Vec2::from_polar(r, phi));
                vel.push(Vec2::new(-phi.sin(), phi.cos()) * speed);
            }
        }
        PatternKind::EightShape => {
            let half = slots / 2;
            let step = 2.0 * PI / half as f64;
            let speed = 2.0 * r * (step / 2.0).tan() / tt;
            let u = p.axis();
            let left = p.center - u * r;
            let right = p.center + u * r;
            let theta = p.orientation_theta;
            for n in 0..=slots {
                if n <= half {
                    let phi = theta + step * n as f64;
                    pos.push(left + Vec2::from_polar(r, phi));
                    vel.push(Vec2::new(-phi.sin(), phi.cos()) * speed);
                } else {
                    let phi = theta + PI - step * (n - half) as f64;
                    pos.push(right + Vec2::from_polar(r, phi));
                    vel.push(Vec2::new(phi.sin(), -phi.cos()) * speed);
                }
            }
        }
    }
    (pos, vel)
}

/// Discretises a pattern into a closed trajectory. Patterns whose derived
/// airspeed or acceleration leaves the flight envelope are rejected.
pub fn generate_pattern(p: &PatternParams, tt: f64, wind: &Wind, uav: &UavParams) -> Result<Trajectory> {
    p.validate(uav)?;
    if !(tt > 0.0) {
        return Err(Error::InvalidArgument("slot duration must be positive".into()));
    }
    let slots = pattern_slots(p.kind, p.period_t0, tt);
    let (pos, vel) = ground_samples(p, slots, tt);
    let mut traj = Trajectory::from_ground_velocities(pos[0], &vel, wind, tt)?;
    // snap to the analytic track; the propagated points agree to round-off
    traj.positions = pos;

    let v_min = min_airspeed(wind, uav);
    for (n, v) in traj.airspeeds.iter().enumerate() {
        let s = v.norm();
        if s < v_min - 1e-9 || s > uav.v_max + 1e-9 {
            return Err(Error::PatternInfeasible(format!(
                "airspeed {s:.3} m/s at sample {n} outside [{v_min}, {}]",
                uav.v_max
            )));
        }
    }
    for (n, a) in traj.accelerations.iter().enumerate() {
        if a.norm() > uav.a_max + 1e-9 {
            return Err(Error::PatternInfeasible(format!(
                "acceleration {:.3} m/s² at slot {n} exceeds {}",
                a.norm(),
                uav.a_max
            )));
        }
    }
    Ok(traj)
}
