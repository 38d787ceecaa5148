//! Trial metrics computed from the measured poses, as a motion-capture
//! post-processing step would.

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::error::{Error, Result};
use crate::harness::sim::TrialLog;

/// Length of the sliding window used for speeds and turn rates, s.
pub const WINDOW_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    /// Mean of the 1 s windowed speeds, m/s.
    pub mean_speed: f64,
    /// m/s
    pub max_windowed_speed: f64,
    /// Windowed speed over the last second, m/s.
    pub final_windowed_speed: f64,
    /// Mean speed in body lengths per second.
    pub mean_speed_bl: f64,
    pub max_speed_bl: f64,
    /// RMS distance to the active reference segment, m.
    pub rms_lateral_error: f64,
    /// RMS lateral error over samples on the first and second segment.
    pub rms_first_segment: f64,
    pub rms_second_segment: Option<f64>,
    /// Largest 1 s windowed |Δψ|/Δt, rad/s.
    pub max_turn_rate: f64,
    /// Last measured heading minus the heading of the final segment, rad.
    pub final_heading_error: f64,
    /// Last measured lateral error, m.
    pub final_lateral_error: f64,
}

fn rms(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v * v;
        n += 1;
    }
    (n > 0).then(|| (sum / n as f64).sqrt())
}

/// Summarise a trial log. Requires at least one full window of samples.
pub fn metrics(log: &TrialLog) -> Result<TrialSummary> {
    let rows = &log.rows;
    if rows.len() < 2 {
        return Err(Error::TooShort { len: rows.len(), min: 2 });
    }
    let dt = rows[1].t - rows[0].t;
    if !(dt > 0.0) {
        return Err(Error::NonUniformSpacing { index: 1, spacing: dt, expected: dt });
    }
    let w = (WINDOW_S / dt).round() as usize;
    if rows.len() < w + 1 {
        return Err(Error::TooShort { len: rows.len(), min: w + 1 });
    }
    if !(log.body_length > 0.0) {
        return Err(Error::Config("body length must be > 0".into()));
    }

    // unwrapped measured heading
    let mut yaw = Vec::with_capacity(rows.len());
    let mut acc = rows[0].measured.psi;
    yaw.push(acc);
    for pair in rows.windows(2) {
        acc += wrap(pair[1].measured.psi - pair[0].measured.psi);
        yaw.push(acc);
    }

    let mut speeds = Vec::with_capacity(rows.len() - w);
    let mut max_turn = 0.0f64;
    for i in w..rows.len() {
        let (a, b) = (&rows[i - w], &rows[i]);
        let span = b.t - a.t;
        let d1 = b.measured.r1 - a.measured.r1;
        let d2 = b.measured.r2 - a.measured.r2;
        speeds.push(d1.hypot(d2) / span);
        max_turn = max_turn.max(((yaw[i] - yaw[i - w]) / span).abs());
    }
    let mean_speed = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let max_speed = speeds.iter().copied().fold(0.0, f64::max);

    let segments = log.path.segments();
    let lateral: Vec<(usize, f64)> = rows
        .iter()
        .map(|r| {
            let line = &segments[r.segment.min(segments.len() - 1)];
            (r.segment, line.local(r.measured.r1, r.measured.r2, r.measured.psi).lateral)
        })
        .collect();
    let last = rows.last().expect("non-empty");
    let final_line = &segments[last.segment.min(segments.len() - 1)];

    let summary = TrialSummary {
        mean_speed,
        max_windowed_speed: max_speed,
        final_windowed_speed: *speeds.last().expect("non-empty"),
        mean_speed_bl: mean_speed / log.body_length,
        max_speed_bl: max_speed / log.body_length,
        rms_lateral_error: rms(lateral.iter().map(|&(_, e)| e)).unwrap_or(0.0),
        rms_first_segment: rms(lateral.iter().filter(|(s, _)| *s == 0).map(|&(_, e)| e)).unwrap_or(0.0),
        rms_second_segment: if segments.len() > 1 {
            rms(lateral.iter().filter(|(s, _)| *s == 1).map(|&(_, e)| e))
        } else {
            None
        },
        max_turn_rate: max_turn,
        final_heading_error: wrap(last.measured.psi - log.path.final_heading()),
        final_lateral_error: final_line.local(last.measured.r1, last.measured.r2, last.measured.psi).lateral,
    };
    let finite = [
        summary.mean_speed,
        summary.max_windowed_speed,
        summary.rms_lateral_error,
        summary.max_turn_rate,
        summary.final_heading_error,
    ];
    if finite.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("trial summary"));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{LineReference, PathReference};
    use crate::dynamics::RobotState;
    use crate::harness::sim::LogRow;
    use crate::sensing::MocapSample;
    use approx::assert_relative_eq;

    const DT: f64 = 1.0 / 250.0;

    fn log(n: usize, f: impl Fn(f64) -> (f64, f64, f64)) -> TrialLog {
        let rows = (0..n)
            .map(|i| {
                let t = i as f64 * DT;
                let (r1, r2, psi) = f(t);
                LogRow {
                    t,
                    state: RobotState::at_pose([r1, r2], psi),
                    measured: MocapSample { t, r1, r2, psi },
                    ..LogRow::default()
                }
            })
            .collect();
        TrialLog {
            rows,
            path: PathReference::Straight(LineReference::new([0.0, 0.0], 0.0)),
            body_length: 0.0458,
            controlled: false,
        }
    }

    #[test]
    fn constant_speed_in_body_lengths() {
        let s = metrics(&log(5001, |t| (0.0151 * t, 0.0, 0.0))).unwrap();
        assert_relative_eq!(s.mean_speed, 0.0151, max_relative = 1e-9);
        assert_relative_eq!(s.max_windowed_speed, 0.0151, max_relative = 1e-9);
        assert!((s.mean_speed_bl - 0.33).abs() < 0.005, "{}", s.mean_speed_bl);
        assert_eq!(s.rms_lateral_error, 0.0);
    }

    #[test]
    fn constant_turn_rate_recovered() {
        let omega = 0.25;
        let s = metrics(&log(2000, |t| (0.0, 0.0, wrap(omega * t)))).unwrap();
        assert_relative_eq!(s.max_turn_rate, omega, max_relative = 1e-9);
    }

    #[test]
    fn constant_offset_rms() {
        let s = metrics(&log(1000, |t| (0.01 * t, 0.02, 0.0))).unwrap();
        assert_relative_eq!(s.rms_lateral_error, 0.02, max_relative = 1e-12);
        assert_relative_eq!(s.final_lateral_error, 0.02, max_relative = 1e-12);
    }

    #[test]
    fn short_log_rejected() {
        assert!(matches!(metrics(&log(100, |_| (0.0, 0.0, 0.0))), Err(Error::TooShort { .. })));
        assert!(metrics(&log(251, |_| (0.0, 0.0, 0.0))).is_ok());
    }

    #[test]
    fn translation_invariant() {
        let f = |t: f64| (0.012 * t, 0.004 * (0.7 * t).sin(), 0.1 * (0.3 * t).cos());
        let base = log(3000, f);
        let a = metrics(&base).unwrap();
        let (dx, dy) = (0.37, -1.25);
        let mut moved = log(3000, move |t| {
            let (x, y, p) = f(t);
            (x + dx, y + dy, p)
        });
        moved.path = PathReference::Straight(LineReference::new([dx, dy], 0.0));
        let b = metrics(&moved).unwrap();
        assert_relative_eq!(a.rms_lateral_error, b.rms_lateral_error, max_relative = 1e-9);
        assert_relative_eq!(a.mean_speed, b.mean_speed, max_relative = 1e-9);
        assert_relative_eq!(a.max_turn_rate, b.max_turn_rate, max_relative = 1e-9);
    }
}
