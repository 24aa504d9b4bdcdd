//! Convex trajectory subproblem at a fixed TDMA schedule.

use crate::comms::{rate_at_sq_distance, rate_slope_sq_distance, Schedule};
use crate::geometry::Vec2;
use crate::kinematics::{min_airspeed, Trajectory};

use super::conic::{Affine, ConicProgram, ConicStatus};
use super::surrogate::dot_split;
use super::{BoundaryMode, FlightProblem, KineticTreatment, ScaConfig};

/// Scale factors keeping cone entries near unity.
const SPEED_REF: f64 = 30.0;
const DIST_REF: f64 = 1000.0;
const CUBE_UNIT: f64 = 1000.0; // c is stored as ‖v‖³ / CUBE_UNIT
const INV_UNIT: f64 = 900.0; // w is stored as 900/μ
const ACC_UNIT: f64 = 100.0; // u is stored as 100‖a‖²/μ
const MEGA: f64 = 1e6;

pub(crate) enum Outcome {
    Solved { trajectory: Trajectory, objective: f64 },
    Infeasible(String),
    Failed(String),
}

struct Layout {
    q: Vec<[usize; 2]>,
    v: Vec<[usize; 2]>,
    a: Vec<[usize; 2]>,
}

fn pair(p: &mut ConicProgram) -> [usize; 2] {
    [p.var(), p.var()]
}

fn vec_expr(idx: [usize; 2], axis: usize) -> Affine {
    Affine::var(idx[axis])
}

/// Scale for the aᵀv split; balances ‖κa‖ against ‖v/κ‖.
pub(crate) fn dot_kappa(problem: &FlightProblem) -> f64 {
    (problem.uav.v_max / problem.uav.a_max).sqrt()
}

pub(crate) fn solve(
    problem: &FlightProblem,
    local: &Trajectory,
    schedule: &Schedule,
    cfg: &ScaConfig,
) -> Outcome {
    let uav = &problem.uav;
    let tt = problem.slot_duration;
    let slots = local.slots();
    let points = slots + 1;
    let wind = problem.wind.vector();
    let v_min = min_airspeed(&problem.wind, uav);
    let g2 = uav.gravity * uav.gravity;
    let kappa = dot_kappa(problem);
    let kinetic = cfg.kinetic == KineticTreatment::Majorized;

    let mut p = ConicProgram::new();
    let lay = Layout {
        q: (0..points).map(|_| pair(&mut p)).collect(),
        v: (0..points).map(|_| pair(&mut p)).collect(),
        a: (0..slots).map(|_| pair(&mut p)).collect(),
    };

    // Discrete wind-shifted kinematics.
    for n in 0..slots {
        for ax in 0..2 {
            let w = if ax == 0 { wind.x } else { wind.y };
            p.eq(Affine::var(lay.v[n + 1][ax])
                .add(lay.v[n][ax], -1.0)
                .add(lay.a[n][ax], -tt));
            p.eq(Affine::var(lay.q[n + 1][ax])
                .add(lay.q[n][ax], -1.0)
                .add(lay.v[n][ax], -tt)
                .add(lay.a[n][ax], -0.5 * tt * tt)
                .plus(-w * tt));
        }
    }

    // Boundary conditions.
    let last = points - 1;
    for ax in 0..2 {
        let comp = |v: Vec2| if ax == 0 { v.x } else { v.y };
        match problem.boundary {
            BoundaryMode::FixedEndpoints => {
                p.eq(Affine::var(lay.q[0][ax]).plus(-comp(problem.start)));
                p.eq(Affine::var(lay.v[0][ax]).plus(-comp(problem.start_velocity)));
                p.eq(Affine::var(lay.q[last][ax]).plus(-comp(problem.end)));
                p.eq(Affine::var(lay.v[last][ax]).plus(-comp(problem.end_velocity)));
            }
            BoundaryMode::MatchedVelocity => {
                p.eq(Affine::var(lay.q[0][ax]).plus(-comp(problem.start)));
                p.eq(Affine::var(lay.q[last][ax]).plus(-comp(problem.end)));
                p.eq(Affine::var(lay.v[last][ax]).add(lay.v[0][ax], -1.0));
            }
            BoundaryMode::PeriodicLap => {
                p.eq(Affine::var(lay.q[last][ax]).add(lay.q[0][ax], -1.0));
                p.eq(Affine::var(lay.v[last][ax]).add(lay.v[0][ax], -1.0));
            }
        }
    }

    // Trust region around the local point.
    for i in 0..points {
        let (qh, vh) = (local.positions[i], local.airspeeds[i]);
        for ax in 0..2 {
            let (qc, vc) = if ax == 0 { (qh.x, vh.x) } else { (qh.y, vh.y) };
            p.nonneg(Affine::term(lay.q[i][ax], -1.0).plus(qc + cfg.trust_position));
            p.nonneg(Affine::var(lay.q[i][ax]).plus(cfg.trust_position - qc));
            p.nonneg(Affine::term(lay.v[i][ax], -1.0).plus(vc + cfg.trust_velocity));
            p.nonneg(Affine::var(lay.v[i][ax]).plus(cfg.trust_velocity - vc));
        }
    }

    // Speed ceiling at every sample point, acceleration limit per slot.
    for i in 0..points {
        p.soc(
            Affine::constant(uav.v_max),
            vec![vec_expr(lay.v[i], 0), vec_expr(lay.v[i], 1)],
        );
    }
    for n in 0..slots {
        p.soc(
            Affine::constant(uav.a_max),
            vec![vec_expr(lay.a[n], 0), vec_expr(lay.a[n], 1)],
        );
    }

    // Per-slot power epigraphs.
    for n in 0..slots {
        let vh = local.airspeeds[n];
        let ah = local.accelerations[n];
        let mu = p.var();
        let speed = p.var();
        let cube = p.var();
        let inv = p.var();
        let acc = p.var();

        // μ ≥ V*, μ² ≤ ‖v̂‖² + 2v̂ᵀ(v − v̂)
        p.nonneg(Affine::var(mu).plus(-v_min));
        let lin_speed_sq = Affine::term(lay.v[n][0], 2.0 * vh.x)
            .add(lay.v[n][1], 2.0 * vh.y)
            .plus(-vh.norm_sq());
        p.rotated(
            lin_speed_sq.scaled(1.0 / SPEED_REF),
            Affine::constant(SPEED_REF),
            vec![Affine::var(mu)],
        );
        // speed ≥ ‖v‖, cube·CUBE_UNIT ≥ speed³
        p.soc(
            Affine::var(speed),
            vec![vec_expr(lay.v[n], 0), vec_expr(lay.v[n], 1)],
        );
        p.power(
            1.0 / 3.0,
            Affine::var(cube),
            Affine::constant(1.0),
            Affine::term(speed, CUBE_UNIT.powf(-1.0 / 3.0)),
        );
        // inv·μ ≥ INV_UNIT
        p.rotated(
            Affine::var(inv),
            Affine::var(mu),
            vec![Affine::constant(INV_UNIT.sqrt())],
        );
        // acc·μ ≥ ACC_UNIT·‖a‖²
        p.rotated(
            Affine::var(acc),
            Affine::var(mu),
            vec![
                Affine::term(lay.a[n][0], ACC_UNIT.sqrt()),
                Affine::term(lay.a[n][1], ACC_UNIT.sqrt()),
            ],
        );

        let aero = Affine::term(cube, uav.drag_coeff * CUBE_UNIT)
            .add(inv, uav.lift_coeff / INV_UNIT)
            .add(acc, uav.lift_coeff / (g2 * ACC_UNIT));

        if !kinetic {
            for &(i, c) in &aero.terms {
                p.add_cost(i, c * tt);
            }
            continue;
        }

        // Split aᵀv = ¼(‖x‖² − ‖y‖²), x = κa + v/κ, y = κa − v/κ.
        let (xh, yh) = dot_split(ah, vh, kappa);
        let split = |sign: f64, ax: usize| {
            Affine::term(lay.a[n][ax], kappa).add(lay.v[n][ax], sign / kappa)
        };
        let lin_sq = |h: Vec2, sign: f64| {
            // ‖ĥ‖² + 2ĥᵀ(h − ĥ) = 2ĥᵀh − ‖ĥ‖²
            split(sign, 0)
                .scaled(2.0 * h.x)
                .add_expr(&split(sign, 1).scaled(2.0 * h.y), 1.0)
                .plus(-h.norm_sq())
        };
        let hx = p.var();
        let hy = p.var();
        let h_ref = SPEED_REF / kappa;
        p.rotated(
            Affine::var(hx),
            Affine::constant(h_ref),
            vec![split(1.0, 0), split(1.0, 1)],
        );
        p.rotated(
            Affine::var(hy),
            Affine::constant(h_ref),
            vec![split(-1.0, 0), split(-1.0, 1)],
        );
        // the kinetic term carries ½Tt‖a‖² on top of aᵀv (slot-average airspeed)
        let acc_sq = p.var();
        p.rotated(
            Affine::var(acc_sq),
            Affine::constant(1.0),
            vec![Affine::var(lay.a[n][0]), Affine::var(lay.a[n][1])],
        );
        let half = 0.5 * tt * uav.mass;
        let lin_acc_sq = Affine::term(lay.a[n][0], 2.0 * ah.x)
            .add(lay.a[n][1], 2.0 * ah.y)
            .plus(-ah.norm_sq());
        let m4 = 0.25 * uav.mass;
        let e = p.var();
        p.add_cost(e, tt);
        // e ≥ aero + m·(¼‖x‖² − ¼·lin‖y‖² + ½Tt‖a‖²)
        p.nonneg(
            Affine::var(e)
                .add_expr(&aero, -1.0)
                .add(hx, -m4 * h_ref)
                .add_expr(&lin_sq(yh, -1.0), m4)
                .add(acc_sq, -half),
        );
        // e ≥ −A·lin‖v‖³ − C/p (linearised) − m·(¼·lin‖x‖² − ¼‖y‖² + ½Tt·lin‖a‖²)
        let s0 = vh.norm();
        let lin_cube = Affine::term(lay.v[n][0], 3.0 * s0 * vh.x)
            .add(lay.v[n][1], 3.0 * s0 * vh.y)
            .plus(s0.powi(3) - 3.0 * s0 * vh.norm_sq());
        let neg_inv = Affine::term(speed, uav.lift_coeff / (s0 * s0)).plus(-2.0 * uav.lift_coeff / s0);
        p.nonneg(
            Affine::var(e)
                .add_expr(&lin_cube, uav.drag_coeff)
                .add_expr(&neg_inv, -1.0)
                .add_expr(&lin_sq(xh, 1.0), m4)
                .add(hy, -m4 * h_ref)
                .add_expr(&lin_acc_sq, half),
        );
    }

    // Throughput: Σ_n τ_k[n]·(R̂ + R̂'(s − ŝ)) ≥ Q̄_k, with t ≥ s = ‖q − b‖².
    for (k, buoy) in problem.buoys.iter().enumerate() {
        if buoy.demand <= 0.0 {
            continue;
        }
        let mut row = Affine::constant(-buoy.demand / MEGA);
        for n in 0..slots {
            let tau = schedule.tau[k][n];
            if tau <= 0.0 {
                continue;
            }
            let s0 = (local.positions[n] - buoy.position).norm_sq();
            let r0 = rate_at_sq_distance(s0, &problem.chan, uav.altitude) / MEGA;
            let slope = rate_slope_sq_distance(s0, &problem.chan, uav.altitude) / MEGA;
            let t = p.var();
            p.rotated(
                Affine::var(t),
                Affine::constant(DIST_REF),
                vec![
                    Affine::var(lay.q[n][0]).plus(-buoy.position.x),
                    Affine::var(lay.q[n][1]).plus(-buoy.position.y),
                ],
            );
            // slope < 0, so the t term enters with a negative coefficient.
            row = row.add(t, tau * slope * DIST_REF).plus(tau * (r0 - slope * s0));
        }
        p.nonneg(row);
    }

    let sol = p.solve(cfg.subproblem_tolerance, 200);
    match sol.status {
        ConicStatus::Infeasible => return Outcome::Infeasible(sol.detail),
        ConicStatus::Failed => return Outcome::Failed(sol.detail),
        ConicStatus::Solved => {}
    }
    let get = |idx: [usize; 2]| Vec2::new(sol.x[idx[0]], sol.x[idx[1]]);
    let trajectory = Trajectory {
        slot_duration: tt,
        positions: lay.q.iter().map(|&i| get(i)).collect(),
        airspeeds: lay.v.iter().map(|&i| get(i)).collect(),
        accelerations: lay.a.iter().map(|&i| get(i)).collect(),
    };
    Outcome::Solved {
        trajectory,
        objective: sol.objective,
    }
}
