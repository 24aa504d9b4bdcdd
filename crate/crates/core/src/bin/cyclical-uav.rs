use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use cyclical_uav::scenario::{
    emit_outputs, emit_sweep, lap_counts, load_run, run_baseline, run_cyclical_sweep,
    run_multibuoy, run_one_flight, Mode, RunRecord, ScenarioConfig,
};
use cyclical_uav::validator::{validate, Tolerances};
use cyclical_uav::Error;

/// Energy-minimising UAV trajectories for buoy data collection in wind.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// SCA design of a single flight from q0 to qF.
    OneFlight(Common),
    /// Straight line at the best constant airspeed.
    Baseline(Common),
    /// Energy versus lap count for cyclical patterns.
    CyclicalSweep {
        #[command(flatten)]
        common: Common,
        /// Lap counts, e.g. 6,10,15,20,30; defaults to the scenario's.
        #[arg(long, value_delimiter = ',')]
        laps: Vec<usize>,
    },
    /// Multi-buoy study; dispatches on the scenario's mode.
    Multibuoy(Common),
    /// Re-validates a run directory written by another subcommand.
    Validate {
        /// Directory holding summary.json, trajectory.csv and schedule.csv.
        run_dir: PathBuf,
    },
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidParams(_) | Error::Table { .. } => {
            EXIT_USAGE
        }
        _ => EXIT_FAIL,
    }
}

fn load_config(common: &Common) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn report(rec: &RunRecord) {
    let energy = rec
        .energy()
        .map_or_else(|| "-".to_string(), |e| format!("{e:.3} J"));
    println!("{}: {} (energy {energy})", rec.label, rec.verdict());
    if let Some(v) = &rec.validation {
        for r in &v.reasons {
            println!("  {r}");
        }
    }
    if let cyclical_uav::scenario::RunStatus::Infeasible { reason, achievable_fraction } = &rec.status {
        println!("  {reason} (achievable fraction {achievable_fraction:.4})");
    }
}

fn single(rec: RunRecord, out: &Path) -> Result<u8, Error> {
    for p in emit_outputs(&rec, out)? {
        info!("wrote {}", p.display());
    }
    report(&rec);
    Ok(if rec.passed() { 0 } else { EXIT_FAIL })
}

fn sweep(records: Vec<RunRecord>, out: &Path) -> Result<u8, Error> {
    for p in emit_sweep(&records, out)? {
        info!("wrote {}", p.display());
    }
    for rec in &records {
        report(rec);
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::OneFlight(c) => {
            let mut cfg = load_config(&c)?;
            cfg.mode = Mode::OneFlight;
            single(run_one_flight(&cfg)?, &c.out)
        }
        Command::Baseline(c) => {
            let mut cfg = load_config(&c)?;
            cfg.mode = Mode::Baseline;
            single(run_baseline(&cfg)?, &c.out)
        }
        Command::CyclicalSweep { common, laps } => {
            let mut cfg = load_config(&common)?;
            cfg.mode = Mode::Cyclical;
            let laps = if laps.is_empty() { lap_counts(&cfg)? } else { laps };
            sweep(run_cyclical_sweep(&cfg, &laps)?, &common.out)
        }
        Command::Multibuoy(c) => {
            let cfg = load_config(&c)?;
            let mut records = run_multibuoy(&cfg)?;
            if cfg.mode == Mode::Cyclical {
                sweep(records, &c.out)
            } else {
                single(records.remove(0), &c.out)
            }
        }
        Command::Validate { run_dir } => {
            let loaded = load_run(&run_dir)?;
            let rec = loaded.record;
            let (Some(problem), Some(traj), Some(sched)) = (&rec.problem, &rec.trajectory, &rec.schedule)
            else {
                println!("{}: nothing to validate ({})", rec.label, rec.verdict());
                return Ok(EXIT_FAIL);
            };
            let report = validate(traj, sched, problem, &Tolerances::default())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?
            );
            Ok(if report.passed() { 0 } else { EXIT_FAIL })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
