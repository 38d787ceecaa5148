//! The scripted experiments: tail sweep, open-loop and closed-loop straight
//! swims, and 90° turns.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{LineReference, PathReference, TurnDirection};
use crate::dynamics::RobotState;
use crate::error::{Error, Result};
use crate::harness::config::{RobotConfig, RunConfig};
use crate::harness::metrics::{metrics, TrialSummary};
use crate::harness::sim::{simulate, Driver, Plant, Scenario, TrialLog};
use crate::hydro::{heavy_tail, TailGeometry, ThrustMap};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub summary: TrialSummary,
    pub log: TrialLog,
}

fn trial_seed(cfg: &RunConfig, trial: usize) -> u64 {
    cfg.seed.wrapping_add(trial as u64)
}

/// Plant for `robot` driven at `frequency`, with the configured actuation.
pub fn build_plant<'a>(cfg: &RunConfig, robot: &RobotConfig, map: &'a ThrustMap, frequency: f64) -> Result<Plant<'a>> {
    Ok(Plant {
        geometry: robot.geometry,
        drag: robot.drag(&cfg.fluid)?,
        tail: robot.tail,
        map,
        frequency,
        bias_displacement: cfg.actuation.bias_displacement,
        offset: cfg.actuation.offset,
        bias: cfg.actuation.bias,
        stroke: cfg.actuation.stroke,
        envelope_gain: cfg.actuation.envelope_torque_gain,
        disturbance: robot.disturbance,
    })
}

fn straight_path() -> PathReference {
    PathReference::Straight(LineReference::new([0.0, 0.0], 0.0))
}

fn mirror_sign(cfg: &RunConfig) -> f64 {
    if cfg.mirror {
        -1.0
    } else {
        1.0
    }
}

/// Run `cfg.trials` seeded trials of the same scenario in parallel; results
/// come back in trial order.
fn run_trials(cfg: &RunConfig, plant: &Plant<'_>, scenario: Scenario) -> Result<Vec<TrialResult>> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(cfg, trial);
            let log = simulate(plant, &Scenario { seed, ..scenario })?;
            Ok(TrialResult {
                trial,
                seed,
                summary: metrics(&log)?,
                log,
            })
        })
        .collect()
}

fn dual_scenario(cfg: &RunConfig, driver: Driver, path: PathReference, duration: f64, offset: f64) -> Scenario {
    Scenario {
        initial: RobotState::at_pose([0.0, mirror_sign(cfg) * offset], 0.0),
        path,
        driver,
        duration,
        settle: 0.0,
        sample_rate: cfg.sensing.fir.sample_rate,
        noise: cfg.sensing.noise,
        seed: cfg.seed,
        mirror: cfg.mirror,
    }
}

/// Equal fixed duties on both propulsors along a straight reference.
pub fn run_open_loop(cfg: &RunConfig, map: &ThrustMap) -> Result<Vec<TrialResult>> {
    let p = build_plant(cfg, &cfg.robots.dual, map, cfg.actuation.frequency)?;
    let duty = cfg.actuation.open_loop_duty;
    let scenario = dual_scenario(
        cfg,
        Driver::Pair { left: duty, right: duty },
        straight_path(),
        cfg.duration_s,
        cfg.control.initial_lateral_offset,
    );
    run_trials(cfg, &p, scenario)
}

/// Straight-line tracking with the cascade controller.
pub fn run_closed_loop(cfg: &RunConfig, map: &ThrustMap) -> Result<Vec<TrialResult>> {
    let p = build_plant(cfg, &cfg.robots.dual, map, cfg.actuation.frequency)?;
    let scenario = dual_scenario(
        cfg,
        Driver::Tracking { gains: cfg.control.gains },
        straight_path(),
        cfg.duration_s,
        cfg.control.initial_lateral_offset,
    );
    run_trials(cfg, &p, scenario)
}

/// Two-segment reference with a 90° corner, tracked in closed loop.
pub fn run_turn(cfg: &RunConfig, map: &ThrustMap, direction: TurnDirection) -> Result<Vec<TrialResult>> {
    let p = build_plant(cfg, &cfg.robots.dual, map, cfg.actuation.frequency)?;
    let path = PathReference::Turn {
        first: LineReference::new([0.0, 0.0], 0.0),
        corner: cfg.turn.corner_distance,
        direction,
    };
    let scenario = dual_scenario(
        cfg,
        Driver::Tracking { gains: cfg.control.gains },
        path,
        cfg.turn.duration_s,
        cfg.control.initial_lateral_offset,
    );
    run_trials(cfg, &p, scenario)
}

/// Aggregate of one (tail, frequency) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub tail: TailGeometry,
    pub frequency: f64,
    pub duty: f64,
    /// Per-trial seeds and summaries, in trial order.
    pub trials: Vec<(u64, TrialSummary)>,
    /// Mean over trials of the trial mean speed, m/s.
    pub mean_speed: f64,
    /// Empirical standard deviation (n − 1), m/s; 0 for a single trial.
    pub esd_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub body_length: f64,
    /// Per-trial logs, kept only on request.
    #[serde(skip)]
    pub logs: Vec<(usize, Vec<TrialLog>)>,
}

pub fn mean_and_esd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Calibration duty of the knot at (tail, frequency), if the map has one.
fn knot_duty(map: &ThrustMap, tail: &TailGeometry, frequency: f64) -> Option<f64> {
    map.entries()
        .iter()
        .find(|e| {
            e.tail.family() == tail.family()
                && (e.tail.length() - tail.length()).abs() <= 1e-12 * tail.length()
                && (e.tail.aspect_ratio() - tail.aspect_ratio()).abs() <= 1e-9 * tail.aspect_ratio()
                && (e.frequency - frequency).abs() <= 1e-12 * frequency
        })
        .map(|e| e.duty)
}

/// Single-swimmer speed sweep over the configured tails and frequencies.
///
/// Each cell runs at its calibration duty with the transmission tuned for the
/// cell frequency, swims for `settle_s` and is then recorded for
/// `duration_s`. Cells outside the calibration are skipped with a warning.
pub fn run_sweep(cfg: &RunConfig, map: &ThrustMap, keep_logs: bool) -> Result<SweepResult> {
    let robot = cfg.robots.single;
    let mut jobs = Vec::new();
    for tail in cfg.sweep.tails()? {
        if heavy_tail(&tail, robot.geometry.mass, cfg.sweep.heavy_tail_fraction) {
            warn!("{tail}: film mass {:.2} mg may sink the robot", tail.film_mass() * 1e6);
        }
        for &f in &cfg.sweep.frequencies_hz {
            match map.curve(&tail, f) {
                Ok(_) => {
                    let duty = knot_duty(map, &tail, f).unwrap_or(cfg.sweep.default_duty);
                    jobs.push((tail, f, duty));
                }
                Err(e @ (Error::Uncalibrated(_) | Error::Extrapolation(_))) => {
                    warn!("skipping {tail} at {f} Hz: {e}");
                }
                Err(e) => return Err(e),
            }
        }
    }

    let results: Vec<(SweepCell, Vec<TrialLog>)> = jobs
        .par_iter()
        .map(|&(tail, f, duty)| {
            let robot = RobotConfig { tail, ..robot };
            let p = build_plant(cfg, &robot, map, f)?;
            let scenario = Scenario {
                initial: RobotState::default(),
                path: straight_path(),
                driver: Driver::Single { duty },
                duration: cfg.duration_s,
                settle: cfg.sweep.settle_s,
                sample_rate: cfg.sensing.fir.sample_rate,
                noise: cfg.sensing.noise,
                seed: cfg.seed,
                mirror: false,
            };
            let trials = run_trials(cfg, &p, scenario)?;
            let speeds: Vec<f64> = trials.iter().map(|t| t.summary.mean_speed).collect();
            let (mean_speed, esd_speed) = mean_and_esd(&speeds);
            let logs = if keep_logs {
                trials.iter().map(|t| t.log.clone()).collect()
            } else {
                Vec::new()
            };
            Ok((
                SweepCell {
                    tail,
                    frequency: f,
                    duty,
                    trials: trials.into_iter().map(|t| (t.seed, t.summary)).collect(),
                    mean_speed,
                    esd_speed,
                },
                logs,
            ))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(results.len());
    let mut logs = Vec::new();
    for (i, (cell, l)) in results.into_iter().enumerate() {
        cells.push(cell);
        if keep_logs {
            logs.push((i, l));
        }
    }
    Ok(SweepResult {
        cells,
        body_length: robot.geometry.body_length,
        logs,
    })
}
