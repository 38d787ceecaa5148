//! Planar 3-DOF rigid-body plant.
//!
//! The state carries the inertial position `r = (r₁, r₂)`, yaw `ψ` about n₃, the
//! body-frame velocity `(v₁, v₂)` along (b₁, b₂) and the yaw rate `ω`. Positive
//! torque turns the robot left (towards b₂).

use std::ops::Add;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::actuation::StrokeEnvelope;
use crate::angle::wrap;
use crate::error::{domain, Error, Result};
use crate::hydro::{drag_wrench, DragModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Single,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotGeometry {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub yaw_inertia: f64,
    /// Overall length including the tail, m.
    pub body_length: f64,
    /// Lateral distance between the two propulsors, m (0 for single).
    pub propulsor_separation: f64,
    pub configuration: Configuration,
}

/// Yaw inertia of a uniform slender box, `m·(L² + W²)/12`.
pub fn slender_box_inertia(mass: f64, length: f64, width: f64) -> f64 {
    mass * (length * length + width * width) / 12.0
}

impl RobotGeometry {
    /// 45 mg single-propulsor swimmer, 45.8 mm overall.
    pub fn single() -> Self {
        Self {
            mass: 45e-6,
            yaw_inertia: slender_box_inertia(45e-6, 0.0458, 0.004),
            body_length: 0.0458,
            propulsor_separation: 0.0,
            configuration: Configuration::Single,
        }
    }

    /// 90 mg dual-propulsor swimmer, propulsors 6 mm apart, 46.0 mm overall.
    pub fn dual() -> Self {
        Self {
            mass: 90e-6,
            yaw_inertia: slender_box_inertia(90e-6, 0.046, 0.010),
            body_length: 0.046,
            propulsor_separation: 0.006,
            configuration: Configuration::Dual,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.mass) || !pos(self.yaw_inertia) || !pos(self.body_length) {
            return Err(domain(format!(
                "mass, yaw inertia and body length must be > 0: {self:?}"
            )));
        }
        if !(self.propulsor_separation >= 0.0) {
            return Err(domain("propulsor separation must be >= 0"));
        }
        if self.configuration == Configuration::Dual && self.propulsor_separation <= 0.0 {
            return Err(domain("dual configuration needs a positive propulsor separation"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    /// Inertial position (r₁, r₂), m.
    pub position: [f64; 2],
    /// Yaw, rad, in (−π, π].
    pub yaw: f64,
    /// Body-frame velocity (v₁, v₂), m·s⁻¹.
    pub velocity: [f64; 2],
    /// rad·s⁻¹
    pub yaw_rate: f64,
    /// s
    pub time: f64,
}

impl RobotState {
    pub fn at_pose(position: [f64; 2], yaw: f64) -> Self {
        Self {
            position,
            yaw: wrap(yaw),
            ..Default::default()
        }
    }

    pub fn kinetic_energy(&self, geom: &RobotGeometry) -> f64 {
        let [u, v] = self.velocity;
        0.5 * geom.mass * (u * u + v * v) + 0.5 * geom.yaw_inertia * self.yaw_rate * self.yaw_rate
    }

    pub fn speed(&self) -> f64 {
        self.velocity[0].hypot(self.velocity[1])
    }

    /// Inertial-frame velocity (ṙ₁, ṙ₂).
    pub fn inertial_velocity(&self) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        let [u, v] = self.velocity;
        [c * u - s * v, s * u + c * v]
    }

    /// Reflection about the n₁ axis.
    pub fn mirrored(&self) -> Self {
        Self {
            position: [self.position[0], -self.position[1]],
            yaw: -self.yaw,
            velocity: [self.velocity[0], -self.velocity[1]],
            yaw_rate: -self.yaw_rate,
            time: self.time,
        }
    }

    fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.velocity.iter().all(|x| x.is_finite())
            && self.yaw.is_finite()
            && self.yaw_rate.is_finite()
            && self.time.is_finite()
    }
}

/// Body-frame force and yaw torque.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: [f64; 2],
    pub torque: f64,
}

impl Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench {
            force: [self.force[0] + rhs.force[0], self.force[1] + rhs.force[1]],
            torque: self.torque + rhs.torque,
        }
    }
}

impl Wrench {
    fn is_finite(&self) -> bool {
        self.force.iter().all(|x| x.is_finite()) && self.torque.is_finite()
    }
}

/// Forward force and differential torque of the two propulsors.
///
/// `F_l + F_r` acts along b₁; the yaw torque is `(F_r − F_l)·w/2`.
pub fn propulsor_wrench(left: f64, right: f64, geom: &RobotGeometry) -> Result<Wrench> {
    if geom.configuration != Configuration::Dual {
        return Err(domain("propulsor_wrench needs a dual-propulsor geometry"));
    }
    if !(left >= 0.0 && right >= 0.0) {
        return Err(domain(format!("thrusts must be >= 0, got ({left}, {right})")));
    }
    Ok(Wrench {
        force: [left + right, 0.0],
        torque: (right - left) * geom.propulsor_separation / 2.0,
    })
}

/// Steering torque from an asymmetric stroke envelope.
///
/// A positive mean angle is a left-biased sweep and turns the body left.
/// `gain` is an effective lever arm in m.
pub fn envelope_torque(env: &StrokeEnvelope, thrust: f64, gain: f64) -> f64 {
    gain * thrust * env.mean_angle
}

/// Drag-balance speed `√(F/c_long)`.
pub fn steady_state_speed(thrust: f64, drag: &DragModel) -> Result<f64> {
    if !(thrust >= 0.0) {
        return Err(domain(format!("thrust must be >= 0, got {thrust}")));
    }
    Ok((thrust / drag.longitudinal).sqrt())
}

/// External lateral load, e.g. a tether pulling on the body.
///
/// The force acts along b₂ at a point `lever_arm` metres ahead of the centre of
/// mass (negative is behind), so it also produces a yaw torque. The noise is a
/// stationary Ornstein–Uhlenbeck process with standard deviation
/// `noise_amplitude` and the given correlation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Disturbance {
    /// N
    pub lateral_bias: f64,
    /// N, standard deviation.
    pub noise_amplitude: f64,
    /// s
    pub correlation_time: f64,
    /// m
    pub lever_arm: f64,
    pub seed: u64,
    /// Negates the noise realisation; used to build mirror-image runs.
    pub mirror_noise: bool,
}

impl Default for Disturbance {
    fn default() -> Self {
        Self::none()
    }
}

impl Disturbance {
    pub fn none() -> Self {
        Self {
            lateral_bias: 0.0,
            noise_amplitude: 0.0,
            correlation_time: 1.0,
            lever_arm: 0.0,
            seed: 0,
            mirror_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lateral_bias.is_finite() || !self.lever_arm.is_finite() {
            return Err(Error::NonFinite("disturbance"));
        }
        if !(self.noise_amplitude >= 0.0) || !(self.correlation_time >= 0.0) {
            return Err(domain("disturbance noise amplitude and correlation time must be >= 0"));
        }
        Ok(())
    }

    pub fn mirrored(&self) -> Self {
        Self {
            lateral_bias: -self.lateral_bias,
            mirror_noise: !self.mirror_noise,
            ..*self
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }

    pub fn process(&self) -> DisturbanceProcess {
        DisturbanceProcess::new(*self)
    }
}

/// Seeded realisation of a [`Disturbance`].
#[derive(Debug, Clone)]
pub struct DisturbanceProcess {
    config: Disturbance,
    rng: ChaCha8Rng,
    noise: f64,
}

impl DisturbanceProcess {
    pub fn new(config: Disturbance) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let noise = if config.noise_amplitude > 0.0 {
            let xi: f64 = StandardNormal.sample(&mut rng);
            config.noise_amplitude * xi
        } else {
            0.0
        };
        Self { config, rng, noise }
    }

    /// Current lateral force, N.
    pub fn force(&self) -> f64 {
        let n = if self.config.mirror_noise {
            -self.noise
        } else {
            self.noise
        };
        self.config.lateral_bias + n
    }

    pub fn wrench(&self) -> Wrench {
        let f = self.force();
        Wrench {
            force: [0.0, f],
            torque: self.config.lever_arm * f,
        }
    }

    /// Advance the noise by `dt`.
    pub fn advance(&mut self, dt: f64) {
        if self.config.noise_amplitude <= 0.0 {
            return;
        }
        let a = if self.config.correlation_time > 0.0 {
            (-dt / self.config.correlation_time).exp()
        } else {
            0.0
        };
        let xi: f64 = StandardNormal.sample(&mut self.rng);
        self.noise = a * self.noise + self.config.noise_amplitude * (1.0 - a * a).sqrt() * xi;
    }
}

/// Advance the plant by `dt` under the applied `wrench` (propulsion), drag and
/// the current disturbance.
///
/// Semi-implicit Euler: the twist is updated first from the forces in the
/// current body frame, the body-frame velocity is then carried into the
/// rotated frame, and the pose is integrated with the new twist.
pub fn step(
    state: &RobotState,
    wrench: &Wrench,
    geom: &RobotGeometry,
    drag: &DragModel,
    dist: &mut DisturbanceProcess,
    dt: f64,
) -> Result<RobotState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("time step must be > 0, got {dt}")));
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("robot state"));
    }
    if !wrench.is_finite() {
        return Err(Error::NonFinite("applied wrench"));
    }
    let total = *wrench + drag_wrench(state, drag) + dist.wrench();
    dist.advance(dt);

    let u = state.velocity[0] + dt * total.force[0] / geom.mass;
    let v = state.velocity[1] + dt * total.force[1] / geom.mass;
    let yaw_rate = state.yaw_rate + dt * total.torque / geom.yaw_inertia;

    let dpsi = dt * yaw_rate;
    let (s, c) = dpsi.sin_cos();
    let velocity = [u * c + v * s, -u * s + v * c];
    let yaw = wrap(state.yaw + dpsi);

    let (sy, cy) = yaw.sin_cos();
    let position = [
        state.position[0] + dt * (cy * velocity[0] - sy * velocity[1]),
        state.position[1] + dt * (sy * velocity[0] + cy * velocity[1]),
    ];

    let next = RobotState {
        position,
        yaw,
        velocity,
        yaw_rate,
        time: state.time + dt,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("integrated state"));
    }
    Ok(next)
}
