//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run `cargo test --release --test acceptance` for the full suite, or pass
//! criterion numbers after `--` to run a subset.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cyclical_uav::comms::rate;
use cyclical_uav::cyclical::PatternKind;
use cyclical_uav::kinematics::{propulsion_power, slot_power, steady_speed_optimum};
use cyclical_uav::sca::surrogate::{
    abs_power_majorant, cube_lower, dot_lower, dot_upper, lateral_exact, lateral_upper,
    neg_inverse_upper, negated_power_upper, rate_lower, signed_power_upper, sq_norm_lower,
};
use cyclical_uav::scenario::{
    run_baseline, run_cyclical_sweep, run_one_flight, BuoyConfig, Mode, RunRecord, ScenarioConfig,
    WindConfig,
};
use cyclical_uav::validator::{validate, Tolerances};
use cyclical_uav::{Buoy, ChannelParams, UavParams, Vec2};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

const WINDS: [(&str, f64, f64); 3] = [("head", 5.0, 180.0), ("calm", 0.0, 0.0), ("tail", 5.0, 0.0)];

fn chain_config(demand: f64, speed: f64, direction_deg: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.name = "chain".into();
    cfg.buoys[0].demand = demand;
    cfg.wind = WindConfig { speed, direction_deg };
    cfg
}

struct ChainCell {
    demand: f64,
    wind: &'static str,
    baseline: RunRecord,
    one_flight: RunRecord,
}

fn chain_cells() -> &'static [ChainCell] {
    static CELLS: OnceLock<Vec<ChainCell>> = OnceLock::new();
    CELLS.get_or_init(|| {
        let grid: Vec<(f64, &str, f64, f64)> = [200e6, 600e6, 1000e6]
            .iter()
            .flat_map(|&q| WINDS.iter().map(move |&(w, s, d)| (q, w, s, d)))
            .collect();
        grid.par_iter()
            .map(|&(q, w, s, d)| {
                let cfg = chain_config(q, s, d);
                ChainCell {
                    demand: q,
                    wind: w,
                    baseline: run_baseline(&cfg).expect("baseline run"),
                    one_flight: run_one_flight(&cfg).expect("one-flight run"),
                }
            })
            .collect()
    })
}

fn sweep_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.name = "sweep".into();
    cfg.mode = Mode::Cyclical;
    cfg.buoys[0].demand = 6e9;
    cfg.cyclical.patterns = vec![PatternKind::Circular, PatternKind::EightShape];
    cfg
}

const SWEEP_LAPS: [usize; 5] = [6, 10, 15, 20, 30];

fn sweep_records() -> &'static [RunRecord] {
    static RECORDS: OnceLock<Vec<RunRecord>> = OnceLock::new();
    RECORDS.get_or_init(|| run_cyclical_sweep(&sweep_config(), &SWEEP_LAPS).expect("sweep"))
}

struct WindCell {
    per_lap: f64,
    speed: f64,
    records: Vec<RunRecord>,
}

fn wind_cells() -> &'static [WindCell] {
    static CELLS: OnceLock<Vec<WindCell>> = OnceLock::new();
    CELLS.get_or_init(|| {
        let grid: Vec<(f64, f64)> = [300e6, 400e6]
            .iter()
            .flat_map(|&q| [0.0, 5.0, 10.0].into_iter().map(move |s| (q, s)))
            .collect();
        grid.par_iter()
            .map(|&(q, s)| {
                let mut cfg = sweep_config();
                cfg.buoys[0].demand = q;
                cfg.wind = WindConfig { speed: s, direction_deg: 0.0 };
                WindCell {
                    per_lap: q,
                    speed: s,
                    records: run_cyclical_sweep(&cfg, &[1]).expect("cyclical cell"),
                }
            })
            .collect()
    })
}

fn multibuoy_config(wind_speed: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.name = "multibuoy".into();
    cfg.boundary.start = Vec2::new(0.0, 0.0);
    cfg.boundary.end = Vec2::new(1200.0, 0.0);
    cfg.discretization.duration = Some(100.0);
    cfg.buoys = [(300.0, 150.0), (600.0, -150.0), (900.0, 150.0)]
        .iter()
        .map(|&(x, y)| BuoyConfig { position: Vec2::new(x, y), demand: 200e6 })
        .collect();
    cfg.wind = WindConfig { speed: wind_speed, direction_deg: 180.0 };
    cfg
}

fn multibuoy_records() -> &'static (RunRecord, RunRecord) {
    static RECORDS: OnceLock<(RunRecord, RunRecord)> = OnceLock::new();
    RECORDS.get_or_init(|| {
        rayon::join(
            || run_one_flight(&multibuoy_config(0.0)).expect("calm multibuoy"),
            || run_one_flight(&multibuoy_config(10.0)).expect("windy multibuoy"),
        )
    })
}

fn kj(e: Option<f64>) -> String {
    e.map_or_else(|| "n/a".into(), |e| format!("{:.2} kJ", e / 1e3))
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let p = UavParams::default();
    let p1 = propulsion_power(Vec2::new(30.0, 0.0), Vec2::ZERO, &p).unwrap();
    let p2 = propulsion_power(Vec2::new(30.0, 0.0), Vec2::new(0.0, 1.0), &p).unwrap();
    let want1 = 9.26e-4 * 27000.0 + 2250.0 / 30.0;
    let want2 = 9.26e-4 * 27000.0 + 2250.0 / 30.0 * (1.0 + 1.0 / (9.8 * 9.8));
    let rel1 = (p1 - want1).abs() / want1;
    let rel2 = (p2 - want2).abs() / want2;

    let grid = (3000..=100_000)
        .map(|i| i as f64 * 1e-3)
        .min_by(|a, b| p.cruise_power(*a).total_cmp(&p.cruise_power(*b)))
        .unwrap();
    let opt = steady_speed_optimum(&p);
    let rel_opt = (opt - grid).abs() / grid;
    Outcome::new(
        rel1 <= 1e-9 && rel2 <= 1e-9 && rel_opt <= 1e-3,
        format!(
            "P = {p1:.6} W / {p2:.6} W (rel err {rel1:.1e}, {rel2:.1e}); optimum {opt:.4} m/s vs grid {grid:.3} (rel {rel_opt:.1e})"
        ),
    )
}

/// Central-difference directional derivative.
fn slope(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

fn unit(rng: &mut ChaCha8Rng) -> Vec2 {
    let t = rng.gen_range(0.0..2.0 * PI);
    Vec2::new(t.cos(), t.sin())
}

struct SlopeCheck {
    worst_side: f64,
    worst_slope: f64,
    samples: usize,
}

impl SlopeCheck {
    fn side(&mut self, bound: f64, exact: f64, upper: bool) {
        let gap = if upper { exact - bound } else { bound - exact };
        self.worst_side = self.worst_side.max(gap / exact.abs().max(1.0));
    }

    fn tangent(&mut self, bound: impl Fn(f64) -> f64, exact: impl Fn(f64) -> f64, h: f64) {
        let gb = slope(&bound, h);
        let ge = slope(&exact, h);
        let scale = ge.abs().max(1e-3);
        self.worst_slope = self.worst_slope.max((gb - ge).abs() / scale);
        self.samples += 1;
    }
}

fn surrogate_scenario(uav: &UavParams, chan: &ChannelParams, seed: u64, samples: usize) -> SlopeCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = SlopeCheck { worst_side: f64::NEG_INFINITY, worst_slope: 0.0, samples: 0 };
    let kappa = (uav.v_max / uav.a_max).sqrt();
    let signed = |v: Vec2, a: Vec2| {
        uav.drag_coeff * v.norm().powi(3)
            + uav.lift_coeff / v.norm() * (1.0 + lateral_exact(v, a, uav))
            + uav.mass * a.dot(v)
    };
    for _ in 0..samples {
        let v0 = unit(&mut rng) * rng.gen_range(uav.v_stall..uav.v_max);
        let a0 = unit(&mut rng) * rng.gen_range(0.0..uav.a_max);
        let v = unit(&mut rng) * rng.gen_range(uav.v_stall..uav.v_max);
        let a = unit(&mut rng) * rng.gen_range(0.0..uav.a_max);
        let q0 = Vec2::new(rng.gen_range(-1000.0..1000.0), rng.gen_range(-1000.0..1000.0));
        let q = Vec2::new(rng.gen_range(-1000.0..1000.0), rng.gen_range(-1000.0..1000.0));
        let b = Vec2::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
        let buoy = Buoy::new(b, 0.0);
        let (dv, da, dq) = (unit(&mut rng), unit(&mut rng), unit(&mut rng));

        // which side of the true function each bound sits on
        c.side(sq_norm_lower(v, v0), v.norm_sq(), false);
        c.side(rate_lower(q, q0, b, chan, uav.altitude), rate(q, &buoy, chan, uav.altitude), false);
        c.side(dot_upper(a, v, a0, v0, kappa), a.dot(v), true);
        c.side(dot_lower(a, v, a0, v0, kappa), a.dot(v), false);
        c.side(cube_lower(v, v0), v.norm().powi(3), false);
        c.side(neg_inverse_upper(v.norm(), v0.norm(), uav.lift_coeff), -uav.lift_coeff / v.norm(), true);
        c.side(lateral_upper(a, uav), lateral_exact(v, a, uav), true);
        c.side(signed_power_upper(v, a, v0, a0, kappa, uav), signed(v, a), true);
        c.side(negated_power_upper(v, a, v0, a0, kappa, uav), -signed(v, a), true);
        c.side(
            abs_power_majorant(v, a, 0.5, uav, true),
            slot_power(v, a, 0.5, uav).unwrap(),
            true,
        );

        // first-order agreement at the expansion point
        c.tangent(|t| sq_norm_lower(v0 + dv * t, v0), |t| (v0 + dv * t).norm_sq(), 1e-3);
        c.tangent(
            |t| rate_lower(q0 + dq * t, q0, b, chan, uav.altitude),
            |t| rate(q0 + dq * t, &buoy, chan, uav.altitude),
            1e-2,
        );
        c.tangent(
            |t| dot_upper(a0 + da * t, v0 + dv * t, a0, v0, kappa),
            |t| (a0 + da * t).dot(v0 + dv * t),
            1e-3,
        );
        c.tangent(
            |t| dot_lower(a0 + da * t, v0 + dv * t, a0, v0, kappa),
            |t| (a0 + da * t).dot(v0 + dv * t),
            1e-3,
        );
        c.tangent(|t| cube_lower(v0 + dv * t, v0), |t| (v0 + dv * t).norm().powi(3), 1e-3);
        let s0 = v0.norm();
        c.tangent(
            |t| neg_inverse_upper(s0 + t, s0, uav.lift_coeff),
            |t| -uav.lift_coeff / (s0 + t),
            1e-3,
        );
        // composite power bounds also relax the lateral factor, which is
        // exact (with zero slope gap) for a ⊥ v and a ∥ v respectively
        let a_perp = v0.perp() / s0 * a0.norm();
        c.tangent(
            |t| signed_power_upper(v0 + dv * t, a_perp + da * t, v0, a_perp, kappa, uav),
            |t| signed(v0 + dv * t, a_perp + da * t),
            1e-3,
        );
        let a_par = v0 / s0 * a0.norm();
        c.tangent(
            |t| negated_power_upper(v0 + dv * t, a_par + da * t, v0, a_par, kappa, uav),
            |t| -signed(v0 + dv * t, a_par + da * t),
            1e-3,
        );
    }
    c
}

fn criterion_2() -> Outcome {
    let default = (UavParams::default(), ChannelParams::default());
    let mut alt_uav = UavParams::default();
    alt_uav.altitude = 150.0;
    alt_uav.mass = 15.0;
    let alt = (alt_uav, ChannelParams::from_db(2e6, 60.0));
    let samples = 1500;
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (uav, chan)) in [default, alt].iter().enumerate() {
        let c = surrogate_scenario(uav, chan, 17 + i as u64, samples);
        let ok = c.worst_side <= 1e-9 && c.worst_slope <= 1e-4;
        pass &= ok;
        parts.push(format!(
            "scenario {i}: {samples} samples, worst side gap {:.1e}, worst slope gap {:.1e} over {} checks",
            c.worst_side.max(0.0),
            c.worst_slope,
            c.samples
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn replay(rec: &RunRecord) -> Result<(), String> {
    let (Some(problem), Some(traj), Some(sched)) = (&rec.problem, &rec.trajectory, &rec.schedule) else {
        return Err(format!("{}: no solution to replay", rec.label));
    };
    let report = validate(traj, sched, problem, &Tolerances::default()).map_err(|e| e.to_string())?;
    if !report.passed() {
        return Err(format!("{}: {:?}", rec.label, report.reasons));
    }
    for (k, b) in problem.buoys.iter().enumerate() {
        if report.throughput_deficit[k] > 1e-3 * b.demand {
            return Err(format!("{}: buoy {k} deficit {:.3e} bits", rec.label, report.throughput_deficit[k]));
        }
    }
    if report.kinematic_residual_position > 1e-4 {
        return Err(format!("{}: residual {:.2e} m", rec.label, report.kinematic_residual_position));
    }
    Ok(())
}

fn criterion_3() -> Outcome {
    let mut solved: Vec<&RunRecord> = Vec::new();
    for c in chain_cells() {
        solved.push(&c.baseline);
        solved.push(&c.one_flight);
    }
    solved.extend(sweep_records());
    solved.extend(wind_cells().iter().flat_map(|c| &c.records));
    let (calm, windy) = multibuoy_records();
    solved.extend([calm, windy]);
    solved.retain(|r| r.trajectory.is_some());
    let failures: Vec<String> = solved.iter().filter_map(|r| replay(r).err()).collect();
    Outcome::new(
        failures.is_empty() && !solved.is_empty(),
        if failures.is_empty() {
            format!("{} solved runs replayed, all pass", solved.len())
        } else {
            format!("{} of {} failed: {}", failures.len(), solved.len(), failures.join("; "))
        },
    )
}

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    let mut runs = 0;
    for c in chain_cells() {
        let it = &c.one_flight.iterations;
        if it.is_empty() {
            bad.push(format!("Q={} {}: no trace ({})", c.demand / 1e6, c.wind, c.one_flight.verdict()));
            continue;
        }
        runs += 1;
        if let Some(w) = it.windows(2).find(|w| w[1].objective > w[0].objective + 1e-9) {
            bad.push(format!(
                "Q={} {}: {:.6} -> {:.6}",
                c.demand / 1e6,
                c.wind,
                w[0].objective,
                w[1].objective
            ));
        }
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{runs} traces non-increasing")
        } else {
            bad.join("; ")
        },
    )
}

fn criterion_5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for c in chain_cells() {
        let one = c.one_flight.energy();
        let base = c.baseline.energy();
        let (ok, note) = match (one, base) {
            (Some(o), Some(b)) => (o <= 0.95 * b, format!("{:+.1}%", 100.0 * (o / b - 1.0))),
            (Some(_), None) => (true, "baseline infeasible".to_string()),
            _ => (false, "one-flight not accepted".to_string()),
        };
        pass &= ok;
        parts.push(format!(
            "Q={} {}: {} vs {} {note}{}",
            c.demand / 1e6,
            c.wind,
            kj(one),
            kj(base),
            if ok { "" } else { " FAIL" }
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let energy = |q: f64, (_, s, d): (&str, f64, f64)| run_baseline(&chain_config(q, s, d)).ok().and_then(|r| r.energy());
    let [h1, c1, t1] = WINDS.map(|w| energy(100e6, w));
    let [h8, c8, _] = WINDS.map(|w| energy(800e6, w));
    let small = matches!((t1, c1, h1), (Some(t), Some(c), Some(h)) if t < c && c < h);
    let large = matches!((h8, c8), (Some(h), Some(c)) if h < c);
    Outcome::new(
        small && large,
        format!(
            "Q=100: tail {} < calm {} < head {} [{}]; Q=800: head {} < calm {} [{}]",
            kj(t1),
            kj(c1),
            kj(h1),
            if small { "ok" } else { "violated" },
            kj(h8),
            kj(c8),
            if large { "ok" } else { "violated" }
        ),
    )
}

fn sweep_energy(records: &[RunRecord], kind: PatternKind, laps: usize) -> Option<f64> {
    records
        .iter()
        .find(|r| r.summary.pattern_kind == Some(kind) && r.summary.lap_count == laps)
        .and_then(|r| r.energy())
}

fn criterion_7() -> Outcome {
    let recs = sweep_records();
    let circ: Vec<Option<f64>> = SWEEP_LAPS.iter().map(|&m| sweep_energy(recs, PatternKind::Circular, m)).collect();
    let eight: Vec<Option<f64>> =
        SWEEP_LAPS.iter().map(|&m| sweep_energy(recs, PatternKind::EightShape, m)).collect();
    let all_circ = circ.iter().all(Option::is_some);
    let argmin = circ
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.map(|e| (i, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| SWEEP_LAPS[i]);
    let interior = all_circ && matches!(argmin, Some(m) if m != SWEEP_LAPS[0] && m != SWEEP_LAPS[4]);
    let located = matches!(argmin, Some(15) | Some(20));
    let mut ordering = true;
    for (i, &m) in SWEEP_LAPS.iter().enumerate() {
        if m >= 15 {
            ordering &= matches!((circ[i], eight[i]), (Some(c), Some(e)) if c <= e)
                || matches!((circ[i], eight[i]), (Some(_), None));
        }
    }
    let table: Vec<String> = SWEEP_LAPS
        .iter()
        .enumerate()
        .map(|(i, m)| format!("M={m}: {} / {}", kj(circ[i]), kj(eight[i])))
        .collect();
    Outcome::new(
        interior && located && ordering,
        format!(
            "circular/8-shape {}; argmin M={argmin:?} (interior {interior}, in {{15,20}} {located}); circular <= 8-shape for M>=15: {ordering}",
            table.join(", ")
        ),
    )
}

/// Angle between the 8-shape axis and the wind line, folded into [0°, 90°].
fn axis_wind_angle_deg(theta: f64, wind_dir: f64) -> f64 {
    let d = (theta - wind_dir).rem_euclid(PI);
    d.min(PI - d).to_degrees()
}

fn criterion_8() -> Outcome {
    let cells = wind_cells();
    let find = |q: f64, s: f64, kind: PatternKind| {
        cells
            .iter()
            .find(|c| c.per_lap == q && c.speed == s)
            .and_then(|c| c.records.iter().find(|r| r.summary.pattern_kind == Some(kind)))
    };
    let mut exploit = Vec::new();
    let mut angles = Vec::new();
    let mut angle_ok = true;
    let mut lines = Vec::new();
    for q in [300e6, 400e6] {
        for s in [5.0, 10.0] {
            for kind in [PatternKind::Circular, PatternKind::EightShape] {
                let windy = find(q, s, kind).and_then(|r| r.energy());
                let calm = find(q, 0.0, kind).and_then(|r| r.energy());
                if let (Some(w), Some(c)) = (windy, calm) {
                    if w < c {
                        exploit.push(format!("Q0={} Vw={s} {}", q / 1e6, kind.name()));
                    }
                }
                lines.push(format!("Q0={} Vw={s} {}: {} vs calm {}", q / 1e6, kind.name(), kj(windy), kj(calm)));
            }
            if let Some(p) = find(q, s, PatternKind::EightShape).and_then(|r| r.summary.pattern) {
                let off = 90.0 - axis_wind_angle_deg(p.orientation_theta, 0.0);
                angle_ok &= off <= 15.0;
                angles.push(format!("{:.1}°", p.orientation_theta.to_degrees()));
            } else {
                angle_ok = false;
                angles.push("none".into());
            }
        }
    }
    Outcome::new(
        !exploit.is_empty() && angle_ok,
        format!(
            "wind lowers energy in [{}]; 8-shape θ (wind toward 0°) = [{}]; {}",
            exploit.join(", "),
            angles.join(", "),
            lines.join("; ")
        ),
    )
}

fn criterion_9() -> Outcome {
    let (calm, windy) = multibuoy_records();
    let (ec, ew) = (calm.energy(), windy.energy());
    let (pass, detail) = match (ec, ew) {
        (Some(c), Some(w)) => {
            let gap = 1.0 - w / c;
            let near = (c / 11.17e3 - 1.0).abs() <= 0.2 && (w / 10.44e3 - 1.0).abs() <= 0.2;
            (
                w < c && (gap >= 0.05 || near),
                format!(
                    "calm {} vs headwind {} (gap {:.1}%, within 20% of 11.17/10.44 kJ: {near})",
                    kj(ec),
                    kj(ew),
                    100.0 * gap
                ),
            )
        }
        _ => (false, format!("calm {} ({}), headwind {} ({})", kj(ec), calm.verdict(), kj(ew), windy.verdict())),
    };
    Outcome::new(pass, detail)
}

fn criterion_10() -> Outcome {
    let cell = chain_cells()
        .iter()
        .find(|c| c.demand == 600e6 && c.wind == "calm")
        .expect("chain cell");
    let Some(t) = cell.one_flight.energy().map(|_| cell.one_flight.summary.flight_time_s) else {
        return Outcome::new(false, "reference one-flight run not accepted");
    };
    let t = (t / 0.5).round() * 0.5;
    let mut cfg = chain_config(600e6, 0.0, 0.0);
    cfg.discretization.duration = Some(t);
    let (coarse, fine) = rayon::join(
        || run_one_flight(&cfg).ok().and_then(|r| r.energy()),
        || {
            let mut c = cfg.clone();
            c.discretization.slot_duration = 0.25;
            run_one_flight(&c).ok().and_then(|r| r.energy())
        },
    );
    match (coarse, fine) {
        (Some(a), Some(b)) => {
            let rel = (b - a).abs() / a;
            Outcome::new(
                rel < 0.02,
                format!("T={t} s, Q=600 Mbit calm: Tt=0.5 {} vs Tt=0.25 {} ({:.2}%)", kj(coarse), kj(fine), 100.0 * rel),
            )
        }
        _ => Outcome::new(false, format!("Tt=0.5 {} / Tt=0.25 {}", kj(coarse), kj(fine))),
    }
}

const CRITERIA: [(&str, fn() -> Outcome); 10] = [
    ("power model exactness", criterion_1),
    ("surrogate soundness and tangency", criterion_2),
    ("oracle replay of solved runs", criterion_3),
    ("SCA monotonicity", criterion_4),
    ("benchmark dominance >= 5%", criterion_5),
    ("baseline wind trends", criterion_6),
    ("cyclical lap sweep", criterion_7),
    ("wind exploitation", criterion_8),
    ("multi-buoy long distance", criterion_9),
    ("discretisation robustness", criterion_10),
];

fn main() -> ExitCode {
    let selected: BTreeSet<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .filter(|n| (1..=CRITERIA.len()).contains(n))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let clock = Instant::now();
        let out = check();
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name} ({:.1} s): {}",
            if out.pass { "PASS" } else { "FAIL" },
            clock.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
