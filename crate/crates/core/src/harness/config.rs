//! Run configuration, read from JSON. Every field has a default, so `{}` is a
//! valid document.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actuation::{ActuatorBiasModel, StrokeGain, TransmissionModel};
use crate::control::ControllerGains;
use crate::dynamics::{Configuration, Disturbance, RobotGeometry};
use crate::error::{Error, Result};
use crate::hydro::{
    calibrate_thrust_map, read_speed_table, DragModel, FluidEnvironment, SpeedRow, TailGeometry,
    ThrustMap,
};
use crate::sensing::{FirSpec, MocapNoise};

/// Tail-characterisation speed table shipped with the crate.
pub const DEFAULT_SPEED_TABLE: &str = include_str!("../../data/tail_speeds.csv");

/// Longitudinal drag reference `C_d·A` of the single swimmer, m².
pub const SINGLE_DRAG_AREA: f64 = 2.0e-5;

/// Drag reference of the dual swimmer. Two propulsors at duty 0.12 (1.2× the
/// 5 Hz calibration duty) must reach 13.6 mm/s where one reaches 15.1 mm/s
/// at duty 0.10, so `C_d·A` scales by `2·1.2·(15.1/13.6)²`.
pub fn dual_drag_area() -> f64 {
    SINGLE_DRAG_AREA * 2.0 * 1.2 * (15.1f64 / 13.6).powi(2)
}

/// Rotational drag of the dual swimmer, N·m·s². Chosen so the saturated
/// differential thrust of a closed-loop turn settles near 0.26 rad/s.
pub const DUAL_ROTATIONAL_DRAG: f64 = 1.46e-7;

/// Rotational drag of the single swimmer; it is never steered hard, so half
/// the dual value is used.
pub const SINGLE_ROTATIONAL_DRAG: f64 = 0.5 * DUAL_ROTATIONAL_DRAG;

/// Lateral drag over longitudinal drag.
pub const LATERAL_DRAG_RATIO: f64 = 4.0;

/// Lateral load on the dual swimmer, N. Set so the open-loop straight swim
/// drifts by about 20 mm RMS over 20 s.
pub const DUAL_DISTURBANCE_BIAS: f64 = 1.0e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub geometry: RobotGeometry,
    /// `C_d·A` for longitudinal drag, m².
    pub drag_area: f64,
    pub lateral_drag_ratio: f64,
    /// N·m·s²
    pub rotational_drag: f64,
    #[serde(default)]
    pub disturbance: Disturbance,
    pub tail: TailGeometry,
}

impl RobotConfig {
    pub fn single() -> Self {
        Self {
            geometry: RobotGeometry::single(),
            drag_area: SINGLE_DRAG_AREA,
            lateral_drag_ratio: LATERAL_DRAG_RATIO,
            rotational_drag: SINGLE_ROTATIONAL_DRAG,
            disturbance: Disturbance::none(),
            tail: best_tail(),
        }
    }

    pub fn dual() -> Self {
        Self {
            geometry: RobotGeometry::dual(),
            drag_area: dual_drag_area(),
            lateral_drag_ratio: LATERAL_DRAG_RATIO,
            rotational_drag: DUAL_ROTATIONAL_DRAG,
            disturbance: Disturbance {
                lateral_bias: DUAL_DISTURBANCE_BIAS,
                noise_amplitude: 0.25 * DUAL_DISTURBANCE_BIAS,
                correlation_time: 2.0,
                lever_arm: -0.015,
                seed: 0,
                mirror_noise: false,
            },
            tail: best_tail(),
        }
    }

    pub fn drag(&self, fluid: &FluidEnvironment) -> Result<DragModel> {
        DragModel::from_drag_area(fluid, self.drag_area, self.lateral_drag_ratio, self.rotational_drag)
    }

    pub fn validate(&self, fluid: &FluidEnvironment, expect: Configuration) -> Result<()> {
        self.geometry.validate()?;
        if self.geometry.configuration != expect {
            return Err(Error::Config(format!(
                "robot geometry must be {:?}, got {:?}",
                expect, self.geometry.configuration
            )));
        }
        self.drag(fluid)?;
        self.disturbance.validate()?;
        self.tail.validate()
    }
}

/// Parabolic 26 mm tail with aspect ratio 0.41.
pub fn best_tail() -> TailGeometry {
    TailGeometry::Parabolic {
        length: 0.026,
        aspect_ratio: 0.41,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Robots {
    pub single: RobotConfig,
    pub dual: RobotConfig,
}

impl Default for Robots {
    fn default() -> Self {
        Self {
            single: RobotConfig::single(),
            dual: RobotConfig::dual(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuationConfig {
    /// PWM frequency of the dual-swimmer experiments, Hz.
    pub frequency: f64,
    /// Duty on both sides in the open-loop swim.
    pub open_loop_duty: f64,
    /// Transmission offset δ, m.
    pub offset: f64,
    /// Fixed-end displacement d_b, m. `None` tunes it at the operating
    /// frequency of each run.
    pub bias_displacement: Option<f64>,
    pub bias: ActuatorBiasModel,
    pub stroke: StrokeGain,
    /// Effective lever arm of an asymmetric stroke envelope, m.
    pub envelope_torque_gain: f64,
}

impl Default for ActuationConfig {
    fn default() -> Self {
        Self {
            frequency: 5.0,
            open_loop_duty: 0.12,
            offset: 1e-3,
            bias_displacement: None,
            bias: ActuatorBiasModel::default(),
            stroke: StrokeGain::default(),
            envelope_torque_gain: 1e-3,
        }
    }
}

impl ActuationConfig {
    /// Untuned transmission; callers tune it when `bias_displacement` is unset.
    pub fn transmission(&self) -> Result<TransmissionModel> {
        TransmissionModel::new(self.offset, self.bias_displacement.unwrap_or(0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::Config(format!("actuation frequency must be > 0, got {}", self.frequency)));
        }
        if !(0.0..=1.0).contains(&self.open_loop_duty) {
            return Err(Error::Config(format!("open-loop duty must be in [0, 1], got {}", self.open_loop_duty)));
        }
        if !(self.envelope_torque_gain >= 0.0) {
            return Err(Error::Config("envelope torque gain must be >= 0".into()));
        }
        self.transmission().map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    pub noise: MocapNoise,
    pub fir: FirSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlConfig {
    pub gains: ControllerGains,
    /// Initial distance to the left of the straight reference, m.
    pub initial_lateral_offset: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            gains: ControllerGains::default(),
            initial_lateral_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurnConfig {
    /// Along-track distance of the corner from the start, m.
    pub corner_distance: f64,
    /// s
    pub duration_s: f64,
}

impl Default for TurnConfig {
    fn default() -> Self {
        Self {
            corner_distance: 0.1,
            duration_s: 90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub parabolic_lengths_mm: Vec<f64>,
    pub aspect_ratio: f64,
    pub rectangular_lengths_mm: Vec<f64>,
    pub rectangular_height_mm: f64,
    pub frequencies_hz: Vec<f64>,
    /// Swimming time before the measurement window starts, s.
    pub settle_s: f64,
    /// Duty for cells without a calibration knot.
    pub default_duty: f64,
    /// Tail film mass, as a fraction of robot mass, above which a warning
    /// is logged.
    pub heavy_tail_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            parabolic_lengths_mm: (1..=14).map(|i| 2.0 * i as f64).collect(),
            aspect_ratio: 0.41,
            rectangular_lengths_mm: (1..=10).map(|i| 5.0 * i as f64).collect(),
            rectangular_height_mm: 4.0,
            frequencies_hz: vec![1.0, 5.0, 10.0, 15.0, 20.0],
            settle_s: 60.0,
            default_duty: 0.10,
            heavy_tail_fraction: 0.16,
        }
    }
}

impl SweepConfig {
    pub fn tails(&self) -> Result<Vec<TailGeometry>> {
        let mut out = Vec::new();
        for &l in &self.parabolic_lengths_mm {
            out.push(TailGeometry::parabolic(l / 1000.0, self.aspect_ratio)?);
        }
        for &l in &self.rectangular_lengths_mm {
            out.push(TailGeometry::rectangular(l / 1000.0, self.rectangular_height_mm / 1000.0)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Speed table CSV; the bundled table is used when unset.
    pub speed_table: Option<PathBuf>,
    /// Prebuilt thrust map JSON; takes precedence over `speed_table`.
    pub thrust_map: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fluid: FluidEnvironment,
    pub robots: Robots,
    pub actuation: ActuationConfig,
    pub sensing: SensingConfig,
    pub control: ControlConfig,
    pub turn: TurnConfig,
    pub sweep: SweepConfig,
    pub calibration: CalibrationConfig,
    /// Length of the recorded window, s.
    pub duration_s: f64,
    pub seed: u64,
    pub trials: usize,
    /// Mirror the disturbance, measurement noise and initial offset about the
    /// reference line.
    pub mirror: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fluid: FluidEnvironment::water_20c(),
            robots: Robots::default(),
            actuation: ActuationConfig::default(),
            sensing: SensingConfig::default(),
            control: ControlConfig::default(),
            turn: TurnConfig::default(),
            sweep: SweepConfig::default(),
            calibration: CalibrationConfig::default(),
            duration_s: 20.0,
            seed: 1,
            trials: 10,
            mirror: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.fluid.validate()?;
        self.robots.single.validate(&self.fluid, Configuration::Single)?;
        self.robots.dual.validate(&self.fluid, Configuration::Dual)?;
        self.actuation.validate()?;
        self.sensing.fir.validate()?;
        self.control.gains.validate()?;
        if !(self.duration_s >= 1.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!("duration_s must be >= 1, got {}", self.duration_s)));
        }
        if !(self.turn.duration_s >= 1.0 && self.turn.corner_distance >= 0.0) {
            return Err(Error::Config("turn duration must be >= 1 s and corner distance >= 0".into()));
        }
        if !(self.sweep.settle_s >= 0.0) {
            return Err(Error::Config("sweep settle time must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.sweep.default_duty) {
            return Err(Error::Config("sweep default duty must be in [0, 1]".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        self.sweep.tails()?;
        Ok(())
    }

    pub fn speed_table(&self) -> Result<Vec<SpeedRow>> {
        match &self.calibration.speed_table {
            Some(p) => read_speed_table(fs::File::open(p)?),
            None => read_speed_table(DEFAULT_SPEED_TABLE.as_bytes()),
        }
    }

    /// Thrust map from the configured JSON, or calibrated from the speed
    /// table against the single swimmer's drag (the table was measured on it).
    pub fn thrust_map(&self) -> Result<ThrustMap> {
        if let Some(p) = &self.calibration.thrust_map {
            let text = fs::read_to_string(p)?;
            return Ok(serde_json::from_str(&text)?);
        }
        let drag = self.robots.single.drag(&self.fluid)?;
        calibrate_thrust_map(&self.speed_table()?, &drag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_document_is_default() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"durations": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"control": {"gain": 1}}"#).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_json(r#"{"trials": 0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"control": {"gains": {"kp_heading": -1}}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"sensing": {"fir": {"cutoff": 200}}}"#).is_err());
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn bundled_table_parses() {
        let rows = RunConfig::default().speed_table().unwrap();
        assert_eq!(rows.len(), 14 * 5 + 10 * 5);
        let best = rows
            .iter()
            .find(|r| r.tail == best_tail() && r.frequency == 5.0)
            .unwrap();
        assert_relative_eq!(best.mean_speed, 0.0151, max_relative = 1e-12);
        assert_eq!(best.duty, 0.10);
    }

    #[test]
    fn default_sweep_grid() {
        let s = SweepConfig::default();
        assert_eq!(s.tails().unwrap().len(), 24);
        assert_eq!(s.parabolic_lengths_mm.first(), Some(&2.0));
        assert_eq!(s.parabolic_lengths_mm.last(), Some(&28.0));
        assert_eq!(s.rectangular_lengths_mm.last(), Some(&50.0));
    }
}
