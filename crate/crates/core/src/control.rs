//! Cascade controller for the dual-propulsor swimmer.
//!
//! ```text
//!  r_d2 ─►(+)─► lateral PI ─ψ_d─►(+)─► heading P ─u_ψ─► mapping ─► (u_l, u_r)
//!          ▲-                     ▲-                      ▲
//!          r_2                    ψ                       u_v
//! ```
//!
//! Sign convention: a positive `u_ψ` raises the right duty and lowers the left
//! one, and the resulting thrust differential turns the robot left (positive
//! yaw). Lateral positions are measured positive to the left of the reference.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::error::{domain, Result};
use crate::sensing::MocapSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerGains {
    /// k_p,2, rad·m⁻¹
    pub kp_lateral: f64,
    /// k_i,2, rad·m⁻¹·s⁻¹
    pub ki_lateral: f64,
    /// k_p,ψ, rad⁻¹
    pub kp_heading: f64,
    /// Constant forward duty u_v.
    pub forward_duty: f64,
    pub k_left: f64,
    pub k_right: f64,
    /// Upper duty clamp.
    pub duty_max: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp_lateral: 2.0,
            ki_lateral: 0.1,
            kp_heading: 0.2,
            forward_duty: 0.11,
            k_left: 1.0,
            k_right: 1.0,
            duty_max: 0.15,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.kp_lateral) && pos(self.kp_heading) && pos(self.k_left) && pos(self.k_right)) {
            return Err(domain(format!(
                "k_p2, k_pψ, k_l and k_r must be > 0: {self:?}"
            )));
        }
        if !(self.ki_lateral >= 0.0 && self.ki_lateral.is_finite()) {
            return Err(domain("k_i2 must be >= 0"));
        }
        if !(self.duty_max > 0.0 && self.duty_max <= 1.0) {
            return Err(domain(format!("duty_max must be in (0, 1], got {}", self.duty_max)));
        }
        if !(self.forward_duty >= 0.0 && self.forward_duty <= self.duty_max) {
            return Err(domain(format!(
                "u_v must be in [0, duty_max], got {}",
                self.forward_duty
            )));
        }
        Ok(())
    }

    /// Bound on the lateral integral so that `|k_i2·∫e| ≤ π/4`.
    pub fn integral_limit(&self) -> f64 {
        if self.ki_lateral > 0.0 {
            FRAC_PI_4 / self.ki_lateral
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControllerState {
    /// ∫ r_e,2 dt, m·s
    pub integral: f64,
    pub last_psi_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlOutput {
    pub u_left: f64,
    pub u_right: f64,
}

/// Lateral PI law. Returns the desired heading, saturated to ±π/2; the
/// integral is advanced after the output is formed.
pub fn lateral_controller(
    r_d2: f64,
    r_2: f64,
    cs: &mut ControllerState,
    gains: &ControllerGains,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(domain(format!("controller dt must be > 0, got {dt}")));
    }
    let err = r_d2 - r_2;
    let psi_d = (gains.kp_lateral * err + gains.ki_lateral * cs.integral).clamp(-FRAC_PI_2, FRAC_PI_2);
    let limit = gains.integral_limit();
    cs.integral = (cs.integral + err * dt).clamp(-limit, limit);
    cs.last_psi_d = psi_d;
    Ok(psi_d)
}

pub fn heading_controller(psi_d: f64, psi: f64, gains: &ControllerGains) -> f64 {
    gains.kp_heading * wrap(psi_d - psi)
}

/// Unclamped duty mix `[u_l, u_r] = [[k_l, −k_l], [k_r, k_r]]·[u_v, u_ψ]`.
pub fn mix(u_v: f64, u_psi: f64, gains: &ControllerGains) -> (f64, f64) {
    (gains.k_left * (u_v - u_psi), gains.k_right * (u_v + u_psi))
}

pub fn actuator_mapping(u_v: f64, u_psi: f64, gains: &ControllerGains) -> ControlOutput {
    let (l, r) = mix(u_v, u_psi, gains);
    ControlOutput {
        u_left: l.clamp(0.0, gains.duty_max),
        u_right: r.clamp(0.0, gains.duty_max),
    }
}

/// A straight reference line through `origin` with direction `heading`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineReference {
    pub origin: [f64; 2],
    /// rad
    pub heading: f64,
}

/// Pose expressed in a reference line's frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalPose {
    /// Along-track distance from the origin, m.
    pub along: f64,
    /// Signed distance to the left of the line, m.
    pub lateral: f64,
    /// Yaw relative to the line, rad.
    pub yaw: f64,
}

impl LineReference {
    pub fn new(origin: [f64; 2], heading: f64) -> Self {
        Self {
            origin,
            heading: wrap(heading),
        }
    }

    pub fn local(&self, r1: f64, r2: f64, psi: f64) -> LocalPose {
        let dx = r1 - self.origin[0];
        let dy = r2 - self.origin[1];
        let (s, c) = self.heading.sin_cos();
        LocalPose {
            along: c * dx + s * dy,
            lateral: -s * dx + c * dy,
            yaw: wrap(psi - self.heading),
        }
    }

    pub fn mirrored(&self) -> Self {
        Self {
            origin: [self.origin[0], -self.origin[1]],
            heading: -self.heading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnDirection {
    Left,
    Right,
}

impl TurnDirection {
    pub fn sign(self) -> f64 {
        match self {
            TurnDirection::Left => 1.0,
            TurnDirection::Right => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TurnDirection::Left => "left",
            TurnDirection::Right => "right",
        }
    }
}

impl std::str::FromStr for TurnDirection {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(TurnDirection::Left),
            "right" => Ok(TurnDirection::Right),
            other => Err(crate::Error::Config(format!("unknown turn direction '{other}'"))),
        }
    }
}

/// Path made of one or two straight segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathReference {
    Straight(LineReference),
    /// Follow `first` until the along-track coordinate reaches `corner`, then
    /// follow the perpendicular line through the corner point.
    Turn {
        first: LineReference,
        corner: f64,
        direction: TurnDirection,
    },
}

impl PathReference {
    pub fn segments(&self) -> Vec<LineReference> {
        match *self {
            PathReference::Straight(line) => vec![line],
            PathReference::Turn {
                first,
                corner,
                direction,
            } => {
                let (s, c) = first.heading.sin_cos();
                let point = [first.origin[0] + corner * c, first.origin[1] + corner * s];
                vec![
                    first,
                    LineReference::new(point, first.heading + direction.sign() * FRAC_PI_2),
                ]
            }
        }
    }

    pub fn final_heading(&self) -> f64 {
        self.segments().last().expect("at least one segment").heading
    }
}

/// Replays the segment-switching rule of a [`PathReference`].
#[derive(Debug, Clone)]
pub struct PathTracker {
    segments: Vec<LineReference>,
    corner: Option<f64>,
    active: usize,
}

impl PathTracker {
    pub fn new(path: &PathReference) -> Self {
        let corner = match path {
            PathReference::Straight(_) => None,
            PathReference::Turn { corner, .. } => Some(*corner),
        };
        Self {
            segments: path.segments(),
            corner,
            active: 0,
        }
    }

    /// Active segment index and line after observing `sample`.
    pub fn update(&mut self, sample: &MocapSample) -> (usize, LineReference) {
        if self.active == 0 {
            if let Some(corner) = self.corner {
                if self.segments[0].local(sample.r1, sample.r2, sample.psi).along >= corner {
                    self.active = 1;
                }
            }
        }
        (self.active, self.segments[self.active])
    }

    pub fn active(&self) -> usize {
        self.active
    }
}

/// Everything one pass of the cascade produced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlStep {
    pub output: ControlOutput,
    pub psi_d: f64,
    pub u_psi: f64,
    /// r_e,2 = r_d2 − r_2, m
    pub lateral_error: f64,
}

/// Lateral → heading → mapping for one sample against a reference line.
pub fn control_step(
    sample: &MocapSample,
    reference: &LineReference,
    cs: &mut ControllerState,
    gains: &ControllerGains,
    dt: f64,
) -> Result<ControlStep> {
    let pose = reference.local(sample.r1, sample.r2, sample.psi);
    let psi_d = lateral_controller(0.0, pose.lateral, cs, gains, dt)?;
    let u_psi = heading_controller(psi_d, pose.yaw, gains);
    Ok(ControlStep {
        output: actuator_mapping(gains.forward_duty, u_psi, gains),
        psi_d,
        u_psi,
        lateral_error: -pose.lateral,
    })
}
