use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::{sweep_rows, RunRecord, SweepRow};
use crate::comms::Schedule;
use crate::cyclical::PatternKind;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kinematics::{slot_powers, Trajectory};

const TRAJECTORY_HEADER: [&str; 10] = [
    "n", "t", "q_x", "q_y", "v_x", "v_y", "a_x", "a_y", "ground_speed", "power_w",
];

/// 17 significant digits: parsing the text gives back the same f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Table {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn table_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Table {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory, record: &RunRecord) -> Result<()> {
    let path = PathBuf::from("trajectory.csv");
    let wind = record.problem.as_ref().map(|p| p.wind).unwrap_or_else(crate::kinematics::Wind::calm);
    let uav = record.problem.as_ref().map(|p| p.uav).unwrap_or_default();
    let powers = slot_powers(traj, &uav).unwrap_or_else(|_| vec![f64::NAN; traj.slots()]);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(|e| csv_err(&path, e))?;
    for i in 0..traj.positions.len() {
        let q = traj.positions[i];
        let v = traj.airspeeds[i];
        let (ax, ay, p) = if i < traj.slots() {
            let a = traj.accelerations[i];
            (num(a.x), num(a.y), num(powers[i]))
        } else {
            (String::new(), String::new(), String::new())
        };
        w.write_record([
            i.to_string(),
            num(i as f64 * traj.slot_duration),
            num(q.x),
            num(q.y),
            num(v.x),
            num(v.y),
            ax,
            ay,
            num((v + wind.vector()).norm()),
            p,
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

fn field(rec: &csv::StringRecord, i: usize, path: &Path, row: usize) -> Result<f64> {
    let s = rec
        .get(i)
        .ok_or_else(|| table_err(path, format!("row {row}: missing column {i}")))?;
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| table_err(path, format!("row {row}: bad number {s:?}")))?;
    if !x.is_finite() {
        return Err(table_err(path, format!("row {row}: non-finite value")));
    }
    Ok(x)
}

/// Reads a trajectory table back. The slot duration is the `t` of row 1.
pub fn parse_trajectory_csv<R: Read>(input: R, path: &Path) -> Result<Trajectory> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != TRAJECTORY_HEADER {
        return Err(table_err(path, "unexpected trajectory header"));
    }
    let mut positions = Vec::new();
    let mut airspeeds = Vec::new();
    let mut accelerations = Vec::new();
    let mut times = Vec::new();
    let mut open_tail = false;
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if open_tail {
            return Err(table_err(path, format!("row {row}: data after the final sample")));
        }
        let n: usize = rec
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| table_err(path, format!("row {row}: bad index")))?;
        if n != row {
            return Err(table_err(path, format!("row {row}: index {n} out of order")));
        }
        times.push(field(&rec, 1, path, row)?);
        positions.push(Vec2::new(field(&rec, 2, path, row)?, field(&rec, 3, path, row)?));
        airspeeds.push(Vec2::new(field(&rec, 4, path, row)?, field(&rec, 5, path, row)?));
        if rec.get(6).is_some_and(|s| s.trim().is_empty()) {
            open_tail = true;
        } else {
            accelerations.push(Vec2::new(field(&rec, 6, path, row)?, field(&rec, 7, path, row)?));
        }
    }
    if positions.len() < 2 || !open_tail {
        return Err(table_err(path, "need at least two samples and a final sample row"));
    }
    let slot_duration = times[1];
    if !(slot_duration > 0.0) {
        return Err(table_err(path, "non-positive slot duration"));
    }
    let traj = Trajectory {
        slot_duration,
        positions,
        airspeeds,
        accelerations,
    };
    traj.check_shape()
        .map_err(|e| table_err(path, e.to_string()))?;
    Ok(traj)
}

pub fn write_schedule_csv<W: Write>(out: W, sched: &Schedule) -> Result<()> {
    let path = PathBuf::from("schedule.csv");
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["n".to_string()];
    header.extend((0..sched.buoys()).map(|k| format!("tau_{k}")));
    w.write_record(&header).map_err(|e| csv_err(&path, e))?;
    for n in 0..sched.slots() {
        let mut row = vec![n.to_string()];
        row.extend(sched.tau.iter().map(|r| num(r[n])));
        w.write_record(&row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

pub fn parse_schedule_csv<R: Read>(input: R, path: &Path) -> Result<Schedule> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.get(0) != Some("n")
        || header
            .iter()
            .skip(1)
            .enumerate()
            .any(|(k, h)| h != format!("tau_{k}"))
    {
        return Err(table_err(path, "unexpected schedule header"));
    }
    let buoys = header.len() - 1;
    let mut tau = vec![Vec::new(); buoys];
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != buoys + 1 {
            return Err(table_err(path, format!("row {row}: expected {} columns", buoys + 1)));
        }
        let n: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| table_err(path, format!("row {row}: bad index")))?;
        if n != row {
            return Err(table_err(path, format!("row {row}: index {n} out of order")));
        }
        for (k, col) in tau.iter_mut().enumerate() {
            col.push(field(&rec, k + 1, path, row)?);
        }
    }
    Ok(Schedule { tau })
}

const SWEEP_HEADER: [&str; 9] = [
    "pattern",
    "laps",
    "per_lap_demand_bits",
    "per_lap_energy_j",
    "total_energy_j",
    "period_s",
    "radius_m",
    "theta_rad",
    "verdict",
];

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let path = PathBuf::from("sweep.csv");
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(|e| csv_err(&path, e))?;
    for r in rows {
        w.write_record([
            r.pattern.name().to_string(),
            r.laps.to_string(),
            num(r.per_lap_demand),
            opt(r.per_lap_energy_j),
            opt(r.total_energy_j),
            opt(r.period_s),
            opt(r.radius_m),
            opt(r.theta_rad),
            r.verdict.clone(),
        ])
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

pub fn parse_sweep_csv<R: Read>(input: R, path: &Path) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != SWEEP_HEADER {
        return Err(table_err(path, "unexpected sweep header"));
    }
    let mut rows = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != SWEEP_HEADER.len() {
            return Err(table_err(path, format!("row {row}: wrong column count")));
        }
        let maybe = |i: usize| -> Result<Option<f64>> {
            if rec[i].trim().is_empty() {
                Ok(None)
            } else {
                field(&rec, i, path, row).map(Some)
            }
        };
        rows.push(SweepRow {
            pattern: rec[0]
                .parse::<PatternKind>()
                .map_err(|e| table_err(path, format!("row {row}: {e}")))?,
            laps: rec[1]
                .trim()
                .parse()
                .map_err(|_| table_err(path, format!("row {row}: bad lap count")))?,
            per_lap_demand: field(&rec, 2, path, row)?,
            per_lap_energy_j: maybe(3)?,
            total_energy_j: maybe(4)?,
            period_s: maybe(5)?,
            radius_m: maybe(6)?,
            theta_rad: maybe(7)?,
            verdict: rec[8].to_string(),
        });
    }
    Ok(rows)
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(io_err(path))
}

/// Writes `trajectory.csv`, `schedule.csv` and `summary.json` for one record
/// into `dir` (created if needed) and returns the paths written.
pub fn emit_outputs(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if let Some(traj) = &record.trajectory {
        let p = dir.join("trajectory.csv");
        write_trajectory_csv(create(&p)?, traj, record).map_err(|e| relocate(e, &p))?;
        written.push(p);
    }
    if let Some(sched) = &record.schedule {
        let p = dir.join("schedule.csv");
        write_schedule_csv(create(&p)?, sched).map_err(|e| relocate(e, &p))?;
        written.push(p);
    }
    let p = dir.join("summary.json");
    let text = serde_json::to_string_pretty(record)
        .map_err(|e| Error::Config(format!("summary serialisation: {e}")))?;
    fs::write(&p, text).map_err(io_err(&p))?;
    written.push(p);
    Ok(written)
}

/// Writes every record into its own sub-directory plus `sweep.csv` and
/// `sweep.json` at the top level.
pub fn emit_sweep(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for rec in records {
        written.extend(emit_outputs(rec, &dir.join(&rec.label))?);
    }
    let rows = sweep_rows(records);
    let p = dir.join("sweep.csv");
    write_sweep_csv(create(&p)?, &rows).map_err(|e| relocate(e, &p))?;
    written.push(p);
    let p = dir.join("sweep.json");
    let text = serde_json::to_string_pretty(&rows)
        .map_err(|e| Error::Config(format!("sweep serialisation: {e}")))?;
    fs::write(&p, text).map_err(io_err(&p))?;
    written.push(p);
    Ok(written)
}

fn relocate(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        Error::Table { message, .. } => Error::Table {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    }
}

#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub record: RunRecord,
}

/// Reads a directory written by [`emit_outputs`].
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let p = dir.join("summary.json");
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let mut record: RunRecord =
        serde_json::from_str(&text).map_err(|e| table_err(&p, e.to_string()))?;
    let tp = dir.join("trajectory.csv");
    if tp.exists() {
        record.trajectory = Some(parse_trajectory_csv(fs::File::open(&tp).map_err(io_err(&tp))?, &tp)?);
    }
    let sp = dir.join("schedule.csv");
    if sp.exists() {
        record.schedule = Some(parse_schedule_csv(fs::File::open(&sp).map_err(io_err(&sp))?, &sp)?);
    }
    Ok(LoadedRun { record })
}
