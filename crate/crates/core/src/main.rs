use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use eelsim::control::TurnDirection;
use eelsim::harness::{self, io, RunConfig};

#[derive(Parser)]
#[command(name = "eelsim", version, about = "Simulate tail-driven surface microswimmers")]
struct Cli {
    /// Run configuration (JSON). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; trial i uses seed + i.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Trials per experiment (or per sweep cell).
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a thrust map from the speed table and write thrust_map.json.
    Calibrate,
    /// Single-swimmer speed sweep over tail lengths and frequencies.
    Sweep {
        /// Also write a trajectory CSV for every trial.
        #[arg(long)]
        logs: bool,
    },
    /// Dual swimmer with equal fixed duties.
    OpenLoop,
    /// Dual swimmer tracking a straight line.
    ClosedLoop,
    /// Dual swimmer tracking a 90° turn.
    Turn {
        #[arg(long, value_parser = parse_direction)]
        direction: TurnDirection,
    },
}

fn parse_direction(s: &str) -> Result<TurnDirection, String> {
    s.parse().map_err(|e: eelsim::Error| e.to_string())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let map = cfg.thrust_map().context("building thrust map")?;
    let out = &cli.out;

    let experiment = match &cli.command {
        Command::Calibrate => {
            io::write_json(&out.join("thrust_map.json"), &map)?;
            log::info!("{} calibration entries", map.entries().len());
            "calibrate".to_string()
        }
        Command::Sweep { logs } => {
            let result = harness::run_sweep(&cfg, &map, *logs)?;
            io::write_sweep_outputs(out, &result)?;
            "sweep".to_string()
        }
        Command::OpenLoop => {
            let trials = harness::run_open_loop(&cfg, &map)?;
            io::write_trials(out, &trials, &cfg.sensing.fir)?;
            "open-loop".to_string()
        }
        Command::ClosedLoop => {
            let trials = harness::run_closed_loop(&cfg, &map)?;
            io::write_trials(out, &trials, &cfg.sensing.fir)?;
            "closed-loop".to_string()
        }
        Command::Turn { direction } => {
            let trials = harness::run_turn(&cfg, &map, *direction)?;
            io::write_trials(out, &trials, &cfg.sensing.fir)?;
            format!("turn-{}", direction.as_str())
        }
    };
    io::write_run_json(&out.join("run.json"), &experiment, &cfg)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
