use std::f64::consts::PI;
use std::path::Path;

use proptest::prelude::*;

use cyclical_uav::comms::{allocate_time, rate_table};
use cyclical_uav::cyclical::{
    generate_pattern, geometric_grid, initial_trajectory, PatternKind, PatternParams, SearchConfig,
};
use cyclical_uav::kinematics::{propagate, propulsion_power, slot_power, slot_powers, total_energy};
use cyclical_uav::scenario::{
    parse_schedule_csv, parse_trajectory_csv, run_baseline, write_schedule_csv, write_trajectory_csv,
    BuoyConfig, RunRecord, ScenarioConfig, WindConfig,
};
use cyclical_uav::sca::surrogate::abs_power_majorant;
use cyclical_uav::sca::{BoundaryMode, FlightProblem};
use cyclical_uav::validator::{validate, Tolerances};
use cyclical_uav::{Buoy, ChannelParams, Schedule, Trajectory, UavParams, Vec2, Wind};

fn vec2(lo: f64, hi: f64) -> impl Strategy<Value = Vec2> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Vec2::new(x, y))
}

fn airspeed() -> impl Strategy<Value = Vec2> {
    (3.0f64..100.0, 0.0..2.0 * PI).prop_map(|(s, t)| Vec2::new(s * t.cos(), s * t.sin()))
}

fn wind() -> impl Strategy<Value = Wind> {
    (0.0f64..12.0, 0.0..2.0 * PI).prop_map(|(s, b)| Wind::new(s, b).unwrap())
}

/// Random walk of `n` slots with bounded accelerations, propagated in `wind`.
fn walk(start: Vec2, v0: Vec2, accels: &[Vec2], wind: &Wind, tt: f64) -> Trajectory {
    let mut q = vec![start];
    let mut v = vec![v0];
    for a in accels {
        let (qn, vn) = propagate(*q.last().unwrap(), *v.last().unwrap(), *a, wind, tt);
        q.push(qn);
        v.push(vn);
    }
    Trajectory::new(tt, q, v, accels.to_vec()).unwrap()
}

fn problem_for(traj: &Trajectory, wind: Wind, buoys: Vec<Buoy>) -> FlightProblem {
    let last = traj.slots();
    FlightProblem {
        uav: UavParams::default(),
        chan: ChannelParams::default(),
        buoys,
        wind,
        start: traj.positions[0],
        end: traj.positions[last],
        start_velocity: traj.airspeeds[0],
        end_velocity: traj.airspeeds[last],
        slot_duration: traj.slot_duration,
        slot_count: last - 1,
        boundary: BoundaryMode::FixedEndpoints,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn power_is_nonnegative_and_majorised(v in airspeed(), a in vec2(-3.5, 3.5)) {
        let p = UavParams::default();
        let power = slot_power(v, a, 0.5, &p).unwrap();
        prop_assert!(power >= 0.0);
        prop_assert!(abs_power_majorant(v, a, 0.5, &p, true) >= power - 1e-9 * power.max(1.0));
        // a zero-length slot reduces to the instantaneous power
        prop_assert_eq!(slot_power(v, a, 0.0, &p).unwrap(), propulsion_power(v, a, &p).unwrap());
    }

    #[test]
    fn power_is_invariant_under_rotation(v in airspeed(), a in vec2(-3.5, 3.5), t in 0.0..2.0 * PI) {
        let p = UavParams::default();
        let rot = |x: Vec2| Vec2::new(x.x * t.cos() - x.y * t.sin(), x.x * t.sin() + x.y * t.cos());
        let p0 = propulsion_power(v, a, &p).unwrap();
        let p1 = propulsion_power(rot(v), rot(a), &p).unwrap();
        prop_assert!((p0 - p1).abs() <= 1e-9 * p0.max(1.0));
    }

    #[test]
    fn replay_in_the_same_wind_is_exact(
        start in vec2(-500.0, 500.0),
        v0 in (20.0f64..40.0, 0.0..2.0 * PI).prop_map(|(s, t)| Vec2::new(s * t.cos(), s * t.sin())),
        accels in prop::collection::vec(vec2(-0.5, 0.5), 2..40),
        w in wind(),
    ) {
        let traj = walk(start, v0, &accels, &w, 0.5);
        let (kp, kv) = traj.kinematic_residual(&w);
        prop_assert!(kp <= 1e-9 && kv <= 1e-9);
        let sched = Schedule::zeros(0, traj.slots());
        let report = validate(&traj, &sched, &problem_for(&traj, w, Vec::new()), &Tolerances::default()).unwrap();
        prop_assert!(report.kinematic_residual_position <= 1e-9);
        // the opposite wind: 2·Vw·Tt per step, accumulating linearly on replay
        let flipped = Wind::new(w.speed(), w.angle() + PI).unwrap();
        let (kf, _) = traj.kinematic_residual(&flipped);
        let step = 2.0 * w.speed() * 0.5;
        prop_assert!((kf - step).abs() <= 1e-6 * step.max(1.0), "{kf} vs {step}");
        let drifted = validate(&traj, &sched, &problem_for(&traj, flipped, Vec::new()), &Tolerances::default()).unwrap();
        for (n, d) in drifted.position_drift.iter().enumerate() {
            prop_assert!((d - step * n as f64).abs() <= 1e-6 * (step * n as f64).max(1.0));
        }
    }

    #[test]
    fn patterns_close_on_themselves(
        eight in any::<bool>(),
        center in vec2(-300.0, 300.0),
        radius in 150.0f64..500.0,
        theta in 0.0..2.0 * PI,
        speed in 25.0f64..45.0,
        w in (0.0f64..6.0, 0.0..2.0 * PI).prop_map(|(s, b)| Wind::new(s, b).unwrap()),
    ) {
        let kind = if eight { PatternKind::EightShape } else { PatternKind::Circular };
        let period = kind.loops() * 2.0 * PI * radius / speed;
        let p = PatternParams::new(kind, center, radius, theta, period).unwrap();
        let uav = UavParams::default();
        if let Ok(traj) = generate_pattern(&p, 0.5, &w, &uav) {
            let last = traj.slots();
            prop_assert!((traj.positions[last] - traj.positions[0]).norm() < 1e-6);
            prop_assert!((traj.airspeeds[last] - traj.airspeeds[0]).norm() < 1e-6);
            prop_assert!(traj.is_consistent(&w));
            if eight {
                prop_assert_eq!(last % 2, 0);
            }
            for q in &traj.positions {
                let d = (*q - center).norm();
                let on = if eight {
                    let u = p.axis();
                    ((*q - (center - u * radius)).norm() - radius).abs() < 1e-6
                        || ((*q - (center + u * radius)).norm() - radius).abs() < 1e-6
                } else {
                    (d - radius).abs() < 1e-6
                };
                prop_assert!(on);
            }
        }
    }

    #[test]
    fn calm_circle_has_constant_power(radius in 150.0f64..500.0, speed in 20.0f64..60.0) {
        let p = PatternParams::new(PatternKind::Circular, Vec2::ZERO, radius, 0.0, 2.0 * PI * radius / speed).unwrap();
        let uav = UavParams::default();
        if let Ok(traj) = generate_pattern(&p, 0.5, &Wind::calm(), &uav) {
            let powers = slot_powers(&traj, &uav).unwrap();
            for x in &powers {
                prop_assert!((x - powers[0]).abs() <= 1e-6 * powers[0]);
            }
            let e = total_energy(&traj, &uav).unwrap();
            prop_assert!((e - powers[0] * traj.slots() as f64 * 0.5).abs() <= 1e-6 * e);
        }
    }

    #[test]
    fn single_slot_allocation_matches_closed_form(
        r1 in 1e5f64..1e7, r2 in 1e5f64..1e7, d1 in 0.0f64..5e6, d2 in 0.0f64..5e6,
    ) {
        // one slot, two buoys: feasible iff d1/r1 + d2/r2 ≤ Tt
        let tt = 0.5;
        let need = d1 / r1 + d2 / r2;
        prop_assume!((need - tt).abs() > 1e-6);
        let alloc = allocate_time(&[vec![r1], vec![r2]], &[d1, d2], tt).unwrap();
        prop_assert_eq!(alloc.is_feasible(), need < tt);
        if let Some(s) = alloc.schedule() {
            prop_assert!(s.tau[0][0] + s.tau[1][0] <= tt + 1e-9);
            prop_assert!(s.tau[0][0] * r1 >= d1 * (1.0 - 1e-6) - 1e-3);
            prop_assert!(s.tau[1][0] * r2 >= d2 * (1.0 - 1e-6) - 1e-3);
        }
    }

    #[test]
    fn two_slot_allocation_matches_grid_search(
        rates in prop::collection::vec(1e5f64..1e7, 4),
        d in prop::collection::vec(0.0f64..6e6, 2),
    ) {
        let tt = 0.5;
        let table = vec![vec![rates[0], rates[1]], vec![rates[2], rates[3]]];
        // buoy 1 takes what buoy 0 leaves; grid at 0.01·Tt
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..=100 {
            for j in 0..=100 {
                let t0 = [i as f64 * 0.01 * tt, j as f64 * 0.01 * tt];
                let q0 = t0[0] * rates[0] + t0[1] * rates[1];
                let q1 = (tt - t0[0]) * rates[2] + (tt - t0[1]) * rates[3];
                grid_best = grid_best.max((q0 - d[0]).min(q1 - d[1]));
            }
        }
        let lp = allocate_time(&table, &d, tt).unwrap().min_slack();
        let step = 0.01 * tt * rates.iter().cloned().fold(0.0, f64::max) * 2.0;
        prop_assert!(lp >= grid_best - 1e-3 - 1e-8 * d[0].max(d[1]));
        prop_assert!(lp <= grid_best + step);
        if grid_best > step {
            prop_assert!(lp >= 0.0);
        }
        if grid_best < -step {
            prop_assert!(lp < 0.0);
        }
    }

    #[test]
    fn trajectory_csv_round_trips_exactly(
        start in vec2(-1e3, 1e3),
        v0 in airspeed(),
        accels in prop::collection::vec(vec2(-5.0, 5.0), 1..30),
        w in wind(),
    ) {
        let traj = walk(start, v0, &accels, &w, 0.25);
        let rec = RunRecord::new("prop".into(), cyclical_uav::scenario::RunKind::OneFlight, &ScenarioConfig::default());
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj, &rec).unwrap();
        let back = parse_trajectory_csv(buf.as_slice(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, traj);
    }

    #[test]
    fn schedule_csv_round_trips_exactly(tau in prop::collection::vec(prop::collection::vec(0.0f64..0.5, 1..20), 1..4)) {
        let n = tau[0].len();
        let tau: Vec<Vec<f64>> = tau.into_iter().map(|mut row| { row.resize(n, 0.125); row }).collect();
        let s = Schedule { tau };
        let mut buf = Vec::new();
        write_schedule_csv(&mut buf, &s).unwrap();
        prop_assert_eq!(parse_schedule_csv(buf.as_slice(), Path::new("mem")).unwrap(), s);
    }

    #[test]
    fn config_round_trips(
        speed in 0.0f64..15.0,
        dir in 0.0f64..360.0,
        buoys in prop::collection::vec((vec2(-2e3, 2e3), 0.0f64..2e9), 1..5),
        tt in 0.05f64..2.0,
        seed in any::<u64>(),
    ) {
        let mut cfg = ScenarioConfig::default();
        cfg.wind = WindConfig { speed, direction_deg: dir };
        cfg.buoys = buoys.into_iter().map(|(position, demand)| BuoyConfig { position, demand }).collect();
        cfg.discretization.slot_duration = tt;
        cfg.seed = seed;
        let text = cfg.to_toml_string().unwrap();
        prop_assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }
}

fn small_search(period_steps: usize, radius_steps: usize, theta_steps: usize) -> SearchConfig {
    SearchConfig {
        period_min: 40.0,
        period_max: 200.0,
        period_steps,
        radius_steps,
        theta_steps,
        refine_rounds: 0,
    }
}

/// Cheapest LP-feasible grid pattern, by brute force.
fn exhaustive(kind: PatternKind, buoys: &[Buoy], wind: &Wind, cfg: &SearchConfig) -> Option<f64> {
    let uav = UavParams::default();
    let chan = ChannelParams::default();
    let center = buoys.iter().fold(Vec2::ZERO, |s, b| s + b.position) / buoys.len() as f64;
    let demands: Vec<f64> = buoys.iter().map(|b| b.demand).collect();
    let thetas: Vec<f64> = match kind {
        PatternKind::Circular => vec![0.0],
        PatternKind::EightShape => (0..cfg.theta_steps).map(|i| 2.0 * PI * i as f64 / cfg.theta_steps as f64).collect(),
    };
    let mut best: Option<f64> = None;
    for t in geometric_grid(cfg.period_min, cfg.period_max, cfg.period_steps) {
        let r_max = uav.v_max * t / (2.0 * PI * kind.loops());
        for i in 1..=cfg.radius_steps {
            for &theta in &thetas {
                let Ok(p) = PatternParams::new(kind, center, r_max * i as f64 / cfg.radius_steps as f64, theta, t) else {
                    continue;
                };
                let Ok(traj) = generate_pattern(&p, 0.5, wind, &uav) else { continue };
                let rates = rate_table(&traj, buoys, &chan, uav.altitude);
                if allocate_time(&rates, &demands, 0.5).unwrap().is_feasible() {
                    let e = total_energy(&traj, &uav).unwrap();
                    best = Some(best.map_or(e, |b: f64| b.min(e)));
                }
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn coarse_search_equals_enumeration(
        eight in any::<bool>(),
        b in vec2(-200.0, 200.0),
        demand in 0.0f64..4e8,
        w in (0.0f64..8.0, 0.0..2.0 * PI).prop_map(|(s, b)| Wind::new(s, b).unwrap()),
    ) {
        let kind = if eight { PatternKind::EightShape } else { PatternKind::Circular };
        let buoys = vec![Buoy::new(b, demand)];
        let cfg = small_search(5, 6, 4);
        let oracle = exhaustive(kind, &buoys, &w, &cfg);
        let found = initial_trajectory(kind, &buoys, &[demand], &w, &ChannelParams::default(), &UavParams::default(), &cfg, 0.5);
        match (found, oracle) {
            (Ok(f), Some(o)) => prop_assert!((f.energy - o).abs() <= 1e-9 * o, "{} vs {}", f.energy, o),
            (Err(_), None) => {}
            (f, o) => prop_assert!(false, "search {:?} vs oracle {:?}", f.map(|x| x.energy), o),
        }
    }

    #[test]
    fn finer_nested_grids_never_cost_more(
        eight in any::<bool>(),
        demand in 0.0f64..4e8,
        w in (0.0f64..8.0, 0.0..2.0 * PI).prop_map(|(s, b)| Wind::new(s, b).unwrap()),
    ) {
        let kind = if eight { PatternKind::EightShape } else { PatternKind::Circular };
        let buoys = vec![Buoy::new(Vec2::ZERO, demand)];
        let run = |cfg: SearchConfig| {
            initial_trajectory(kind, &buoys, &[demand], &w, &ChannelParams::default(), &UavParams::default(), &cfg, 0.5)
                .ok()
                .map(|p| p.energy)
        };
        let coarse = run(small_search(5, 5, 4));
        let fine = run(small_search(9, 10, 8));
        if let Some(c) = coarse {
            let f = fine.expect("finer grid contains the coarse one");
            prop_assert!(f <= c * (1.0 + 1e-12));
        }
    }
}

#[test]
fn identical_configs_give_identical_records() {
    let mut cfg = ScenarioConfig::default();
    cfg.buoys[0].demand = 300e6;
    cfg.wind = WindConfig { speed: 5.0, direction_deg: 30.0 };
    let mut a = run_baseline(&cfg).unwrap();
    let mut b = run_baseline(&cfg).unwrap();
    a.timing_s = 0.0;
    b.timing_s = 0.0;
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.schedule, b.schedule);
}
