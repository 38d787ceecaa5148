//! CSV and JSON writers for experiment outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::error::Result;
use crate::harness::config::RunConfig;
use crate::harness::experiments::{SweepResult, TrialResult};
use crate::harness::sim::TrialLog;
use crate::sensing::{filtered_velocities, FirSpec, MocapSample};

const TRAJECTORY_HEADER: [&str; 9] = [
    "t", "r1_mm", "r2_mm", "psi_rad", "v1_mm_s", "v2_mm_s", "omega_rad_s", "u_l", "u_r",
];

fn trajectory_fields(row: &crate::harness::sim::LogRow) -> Vec<f64> {
    let s = &row.state;
    vec![
        row.t,
        s.position[0] * 1e3,
        s.position[1] * 1e3,
        s.yaw,
        s.velocity[0] * 1e3,
        s.velocity[1] * 1e3,
        s.yaw_rate,
        row.u_left,
        row.u_right,
    ]
}

fn header(log: &TrialLog, extra: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = TRAJECTORY_HEADER.iter().map(|s| s.to_string()).collect();
    if log.controlled {
        h.extend(["psi_d".to_string(), "u_psi".to_string()]);
    }
    h.extend(extra.iter().map(|s| s.to_string()));
    h
}

fn row_fields(log: &TrialLog, row: &crate::harness::sim::LogRow) -> Vec<String> {
    let mut f: Vec<String> = trajectory_fields(row).iter().map(|v| v.to_string()).collect();
    if log.controlled {
        f.push(row.psi_d.unwrap_or(0.0).to_string());
        f.push(row.u_psi.unwrap_or(0.0).to_string());
    }
    f
}

/// Simulated state at every sample, in mm and body-frame velocities.
pub fn write_trajectory(path: &Path, log: &TrialLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(log, &[]))?;
    for row in &log.rows {
        w.write_record(row_fields(log, row))?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory columns plus body-frame velocities recovered from the measured
/// poses by differentiation and low-pass filtering. Returns `false` (and
/// writes nothing) when the log is shorter than the filter.
pub fn write_filtered(path: &Path, log: &TrialLog, fir: &FirSpec) -> Result<bool> {
    if log.rows.len() < fir.order + 1 {
        warn!(
            "{} samples is shorter than the {}-tap filter; no filtered log written",
            log.rows.len(),
            fir.order + 1
        );
        return Ok(false);
    }
    let samples: Vec<MocapSample> = log.rows.iter().map(|r| r.measured).collect();
    let vel = filtered_velocities(&samples, fir)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(log, &["v1_filt_mm_s", "v2_filt_mm_s", "omega_filt_rad_s"]))?;
    for (i, row) in log.rows.iter().enumerate() {
        let (s, c) = row.measured.psi.sin_cos();
        let (vx, vy) = (vel.v1[i], vel.v2[i]);
        let mut f = row_fields(log, row);
        f.push(((c * vx + s * vy) * 1e3).to_string());
        f.push(((-s * vx + c * vy) * 1e3).to_string());
        f.push(vel.omega[i].to_string());
        w.write_record(f)?;
    }
    w.flush()?;
    Ok(true)
}

#[derive(Serialize)]
struct SummaryRecord {
    trial: usize,
    seed: u64,
    mean_speed_mm_s: f64,
    max_speed_mm_s: f64,
    mean_speed_bl_s: f64,
    max_speed_bl_s: f64,
    rms_lateral_mm: f64,
    rms_first_segment_mm: f64,
    rms_second_segment_mm: Option<f64>,
    max_turn_rate_rad_s: f64,
    final_heading_error_rad: f64,
    final_lateral_error_mm: f64,
}

/// One row per trial.
pub fn write_summary(path: &Path, trials: &[TrialResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in trials {
        let s = &t.summary;
        w.serialize(SummaryRecord {
            trial: t.trial,
            seed: t.seed,
            mean_speed_mm_s: s.mean_speed * 1e3,
            max_speed_mm_s: s.max_windowed_speed * 1e3,
            mean_speed_bl_s: s.mean_speed_bl,
            max_speed_bl_s: s.max_speed_bl,
            rms_lateral_mm: s.rms_lateral_error * 1e3,
            rms_first_segment_mm: s.rms_first_segment * 1e3,
            rms_second_segment_mm: s.rms_second_segment.map(|v| v * 1e3),
            max_turn_rate_rad_s: s.max_turn_rate,
            final_heading_error_rad: s.final_heading_error,
            final_lateral_error_mm: s.final_lateral_error * 1e3,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepRecord {
    family: &'static str,
    length_mm: f64,
    height_mm: f64,
    freq_hz: f64,
    duty: f64,
    trials: usize,
    mean_speed_mm_s: f64,
    esd_speed_mm_s: f64,
    mean_speed_bl_s: f64,
}

#[derive(Serialize)]
struct SweepTrialRecord {
    family: &'static str,
    length_mm: f64,
    freq_hz: f64,
    trial: usize,
    seed: u64,
    mean_speed_mm_s: f64,
    max_speed_mm_s: f64,
    mean_speed_bl_s: f64,
}

/// `sweep.csv` with one row per cell.
pub fn write_sweep(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in &result.cells {
        w.serialize(SweepRecord {
            family: c.tail.family().as_str(),
            length_mm: c.tail.length() * 1e3,
            height_mm: c.tail.height() * 1e3,
            freq_hz: c.frequency,
            duty: c.duty,
            trials: c.trials.len(),
            mean_speed_mm_s: c.mean_speed * 1e3,
            esd_speed_mm_s: c.esd_speed * 1e3,
            mean_speed_bl_s: c.mean_speed / result.body_length,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// `summary.csv` for a sweep: one row per trial of every cell.
pub fn write_sweep_summary(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for c in &result.cells {
        for (trial, (seed, s)) in c.trials.iter().enumerate() {
            w.serialize(SweepTrialRecord {
                family: c.tail.family().as_str(),
                length_mm: c.tail.length() * 1e3,
                freq_hz: c.frequency,
                trial,
                seed: *seed,
                mean_speed_mm_s: s.mean_speed * 1e3,
                max_speed_mm_s: s.max_windowed_speed * 1e3,
                mean_speed_bl_s: s.mean_speed_bl,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RunEcho<'a> {
    experiment: &'a str,
    config: &'a RunConfig,
}

/// `run.json`: the experiment name and the fully resolved configuration.
pub fn write_run_json(path: &Path, experiment: &str, cfg: &RunConfig) -> Result<()> {
    write_json(path, &RunEcho { experiment, config: cfg })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Write the per-trial trajectory and filtered logs plus `summary.csv`.
pub fn write_trials(dir: &Path, trials: &[TrialResult], fir: &FirSpec) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in trials {
        write_trajectory(&dir.join(format!("trial_{:03}.csv", t.trial)), &t.log)?;
        write_filtered(&dir.join(format!("trial_{:03}_filt.csv", t.trial)), &t.log, fir)?;
    }
    write_summary(&dir.join("summary.csv"), trials)
}

/// Write a sweep's `sweep.csv`, `summary.csv` and any kept trial logs.
pub fn write_sweep_outputs(dir: &Path, result: &SweepResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_sweep(&dir.join("sweep.csv"), result)?;
    write_sweep_summary(&dir.join("summary.csv"), result)?;
    for (i, logs) in &result.logs {
        let c = &result.cells[*i];
        for (trial, log) in logs.iter().enumerate() {
            let name = format!(
                "{}_{}mm_{}hz_trial_{:03}.csv",
                c.tail.family().as_str(),
                c.tail.length() * 1e3,
                c.frequency,
                trial
            );
            write_trajectory(&dir.join(name), log)?;
        }
    }
    Ok(())
}
