//! Convex/concave bounds used to build each SCA subproblem.
//!
//! Every function here is tight at the local point and lies on a fixed side
//! of the function it replaces everywhere.

use crate::comms::{rate_at_sq_distance, rate_slope_sq_distance, ChannelParams};
use crate::geometry::Vec2;
use crate::kinematics::UavParams;

/// First-order expansion of ‖x‖² at `x0`; a global lower bound.
pub fn sq_norm_lower(x: Vec2, x0: Vec2) -> f64 {
    x0.norm_sq() + 2.0 * x0.dot(x - x0)
}

/// Lower bound on R(q) from expanding the rate in s = ‖q − b‖² around the
/// local point. Concave in q.
pub fn rate_lower(q: Vec2, q0: Vec2, buoy: Vec2, chan: &ChannelParams, altitude: f64) -> f64 {
    let s0 = (q0 - buoy).norm_sq();
    let s = (q - buoy).norm_sq();
    rate_at_sq_distance(s0, chan, altitude) + rate_slope_sq_distance(s0, chan, altitude) * (s - s0)
}

/// Lateral-load factor (‖a‖² − (aᵀv)²/‖v‖²)/g² bounded above by ‖a‖²/g².
pub fn lateral_upper(a: Vec2, params: &UavParams) -> f64 {
    a.norm_sq() / (params.gravity * params.gravity)
}

/// Exact lateral-load factor.
pub fn lateral_exact(v: Vec2, a: Vec2, params: &UavParams) -> f64 {
    let along = a.dot(v);
    (a.norm_sq() - along * along / v.norm_sq()) / (params.gravity * params.gravity)
}

/// Aerodynamic power A‖v‖³ + (C/μ)(1 + ‖a‖²/g²) for a speed lower bound μ ≤ ‖v‖.
pub fn aero_power_upper(v: Vec2, a: Vec2, mu: f64, params: &UavParams) -> f64 {
    params.drag_coeff * v.norm().powi(3) + params.lift_coeff / mu * (1.0 + lateral_upper(a, params))
}

/// Exact aerodynamic part of the propulsion power (no kinetic term).
pub fn aero_power(v: Vec2, a: Vec2, params: &UavParams) -> f64 {
    let s = v.norm();
    params.drag_coeff * s.powi(3) + params.lift_coeff / s * (1.0 + lateral_exact(v, a, params))
}

/// Splitting aᵀv = ¼(‖κa + v/κ‖² − ‖κa − v/κ‖²).
pub fn dot_split(a: Vec2, v: Vec2, kappa: f64) -> (Vec2, Vec2) {
    (a * kappa + v / kappa, a * kappa - v / kappa)
}

/// Convex upper bound on aᵀv.
pub fn dot_upper(a: Vec2, v: Vec2, a0: Vec2, v0: Vec2, kappa: f64) -> f64 {
    let (x, y) = dot_split(a, v, kappa);
    let (_, y0) = dot_split(a0, v0, kappa);
    0.25 * (x.norm_sq() - sq_norm_lower(y, y0))
}

/// Concave lower bound on aᵀv.
pub fn dot_lower(a: Vec2, v: Vec2, a0: Vec2, v0: Vec2, kappa: f64) -> f64 {
    let (x, y) = dot_split(a, v, kappa);
    let (x0, _) = dot_split(a0, v0, kappa);
    0.25 * (sq_norm_lower(x, x0) - y.norm_sq())
}

/// Linear lower bound on ‖v‖³ (tangent plane of a convex function).
pub fn cube_lower(v: Vec2, v0: Vec2) -> f64 {
    let s0 = v0.norm();
    s0.powi(3) + 3.0 * s0 * v0.dot(v - v0)
}

/// Tangent of the concave map p ↦ −C/p at p0; an upper bound.
pub fn neg_inverse_upper(p: f64, p0: f64, c: f64) -> f64 {
    -c / p0 + c / (p0 * p0) * (p - p0)
}

/// Upper bound on the signed propulsion argument
/// A‖v‖³ + (C/‖v‖)(1 + lateral/g²) + m·aᵀv at (v, a), expanded at (v0, a0).
pub fn signed_power_upper(v: Vec2, a: Vec2, v0: Vec2, a0: Vec2, kappa: f64, params: &UavParams) -> f64 {
    let mu = v.norm().min(sq_norm_lower(v, v0).max(0.0).sqrt());
    aero_power_upper(v, a, mu, params) + params.mass * dot_upper(a, v, a0, v0, kappa)
}

/// Upper bound on the negated propulsion argument, expanded at (v0, a0).
pub fn negated_power_upper(v: Vec2, a: Vec2, v0: Vec2, a0: Vec2, kappa: f64, params: &UavParams) -> f64 {
    -params.drag_coeff * cube_lower(v, v0)
        + neg_inverse_upper(v.norm(), v0.norm(), params.lift_coeff)
        - params.mass * dot_lower(a, v, a0, v0, kappa)
}

/// Majorant of the slot power |P| (kinetic term at the slot-average
/// airspeed v + ½a·Tt) evaluated at its own expansion point. With `kinetic`
/// false only the aerodynamic part is bounded.
pub fn abs_power_majorant(v: Vec2, a: Vec2, tt: f64, params: &UavParams, kinetic: bool) -> f64 {
    let aero = params.drag_coeff * v.norm().powi(3)
        + params.lift_coeff / v.norm() * (1.0 + lateral_upper(a, params));
    if !kinetic {
        return aero;
    }
    let k = params.mass * (a.dot(v) + 0.5 * tt * a.norm_sq());
    let neg = -params.drag_coeff * v.norm().powi(3) - params.lift_coeff / v.norm() - k;
    (aero + k).max(neg)
}
