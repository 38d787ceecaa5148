//! PWM excitation, SMA bias accumulation and the tail-root stroke envelope.
//!
//! Above a threshold frequency the SMA wires cannot cool fully within a cycle
//! and the actuator output drifts by a steady-state bias. The four-bar
//! transmission is installed with an opposing bias angle `φ_b = d_b/δ`; when the
//! two match, the tail sweeps symmetrically about the b₁–b₃ plane.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwmSignal {
    /// Hz
    pub frequency: f64,
    /// Fraction of the period spent at the on voltage.
    pub duty: f64,
    /// V, informational.
    pub on_voltage: f64,
    /// A, informational.
    pub on_current: f64,
}

impl PwmSignal {
    pub fn new(frequency: f64, duty: f64) -> Result<Self> {
        let pwm = Self {
            frequency,
            duty,
            on_voltage: 22.0,
            on_current: 0.25,
        };
        pwm.validate()?;
        Ok(pwm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(domain(format!("PWM frequency must be > 0, got {}", self.frequency)));
        }
        if !(0.0..=1.0).contains(&self.duty) {
            return Err(domain(format!("PWM duty must be in [0, 1], got {}", self.duty)));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }
}

/// Four-bar transmission: offset `δ` between fixed and free ends, and the
/// displacement `d_b` of the fixed end that sets the bias angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmissionModel {
    /// δ, m
    pub offset: f64,
    /// d_b, m
    pub bias_displacement: f64,
}

impl TransmissionModel {
    pub fn new(offset: f64, bias_displacement: f64) -> Result<Self> {
        if !(offset > 0.0 && offset.is_finite()) {
            return Err(domain(format!("transmission offset must be > 0, got {offset}")));
        }
        Ok(Self {
            offset,
            bias_displacement,
        })
    }

    /// Small-displacement transmission ratio `T = 1/δ` (rad·m⁻¹).
    pub fn ratio(&self) -> f64 {
        1.0 / self.offset
    }
}

/// Steady-state bias of the SMA actuator as a function of PWM frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorBiasModel {
    /// rad per Hz above the threshold.
    pub bias_gain: f64,
    /// Hz; no bias accumulates at or below this frequency.
    pub threshold: f64,
}

impl Default for ActuatorBiasModel {
    fn default() -> Self {
        Self {
            bias_gain: 0.05,
            threshold: 1.0,
        }
    }
}

/// Linear duty-to-amplitude law with saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeGain {
    /// rad per unit duty
    pub gain: f64,
    /// rad
    pub max_amplitude: f64,
}

impl Default for StrokeGain {
    fn default() -> Self {
        Self {
            gain: 6.0,
            max_amplitude: 1.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrokeEnvelope {
    /// Mean tail-root angle, rad; positive is towards b₂ (left).
    pub mean_angle: f64,
    /// Half sweep, rad.
    pub amplitude: f64,
}

impl StrokeEnvelope {
    pub fn is_symmetric(&self) -> bool {
        self.mean_angle == 0.0
    }
}

/// `φ_b = T·d_b = d_b/δ`.
pub fn bias_angle(tr: &TransmissionModel) -> Result<f64> {
    if !(tr.offset > 0.0) {
        return Err(domain(format!("transmission offset must be > 0, got {}", tr.offset)));
    }
    Ok(tr.bias_displacement / tr.offset)
}

pub fn accumulated_bias(model: &ActuatorBiasModel, pwm: &PwmSignal) -> f64 {
    if pwm.frequency <= model.threshold {
        0.0
    } else {
        model.bias_gain * (pwm.frequency - model.threshold)
    }
}

/// The transmission bends the tail against its bias angle, so the envelope is
/// centred on `accumulated_bias − φ_b`.
///
/// The difference is formed in displacement units, `(δ·bias − d_b)/δ`, so a
/// transmission from [`tune_bias`] cancels to exactly zero.
pub fn stroke_envelope(
    pwm: &PwmSignal,
    tr: &TransmissionModel,
    bias: &ActuatorBiasModel,
    stroke: &StrokeGain,
) -> Result<StrokeEnvelope> {
    bias_angle(tr)?;
    let mean_angle = (tr.offset * accumulated_bias(bias, pwm) - tr.bias_displacement) / tr.offset;
    let amplitude = (stroke.gain * pwm.duty).clamp(0.0, stroke.max_amplitude.max(0.0));
    Ok(StrokeEnvelope {
        mean_angle,
        amplitude,
    })
}

/// Shift the fixed end so the envelope is symmetric at `pwm.frequency`:
/// `d_b = δ·accumulated_bias`.
pub fn tune_bias(
    pwm: &PwmSignal,
    bias: &ActuatorBiasModel,
    tr: &TransmissionModel,
) -> Result<TransmissionModel> {
    if !(tr.offset > 0.0) {
        return Err(domain(format!("transmission offset must be > 0, got {}", tr.offset)));
    }
    Ok(TransmissionModel {
        offset: tr.offset,
        bias_displacement: tr.offset * accumulated_bias(bias, pwm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pwm(f: f64) -> PwmSignal {
        PwmSignal::new(f, 0.10).unwrap()
    }

    #[test]
    fn bias_angle_examples() {
        let tr = TransmissionModel::new(1e-3, 0.0).unwrap();
        assert_eq!(bias_angle(&tr).unwrap(), 0.0);

        let tr = TransmissionModel::new(1e-3, 0.3e-3).unwrap();
        assert_relative_eq!(bias_angle(&tr).unwrap(), 0.3, max_relative = 1e-15);

        let wide = TransmissionModel::new(2e-3, 0.3e-3).unwrap();
        assert_relative_eq!(bias_angle(&wide).unwrap(), 0.15, max_relative = 1e-15);

        let bad = TransmissionModel {
            offset: 0.0,
            bias_displacement: 1e-3,
        };
        assert!(bias_angle(&bad).is_err());
        assert!(TransmissionModel::new(-1e-3, 0.0).is_err());
    }

    #[test]
    fn accumulated_bias_examples() {
        let m = ActuatorBiasModel::default();
        assert_eq!(accumulated_bias(&m, &pwm(1.0)), 0.0);
        assert_eq!(accumulated_bias(&m, &pwm(0.5)), 0.0);
        let m = ActuatorBiasModel {
            bias_gain: 0.05,
            threshold: 1.0,
        };
        assert_relative_eq!(accumulated_bias(&m, &pwm(5.0)), 0.2, max_relative = 1e-15);
    }

    #[test]
    fn untuned_envelope_leans_left() {
        let tr = TransmissionModel::new(1e-3, 0.0).unwrap();
        let env = stroke_envelope(&pwm(5.0), &tr, &ActuatorBiasModel::default(), &StrokeGain::default())
            .unwrap();
        assert!(env.mean_angle > 0.0);
    }

    #[test]
    fn zero_duty_zero_amplitude() {
        let tr = TransmissionModel::new(1e-3, 0.0).unwrap();
        let idle = PwmSignal::new(5.0, 0.0).unwrap();
        let env =
            stroke_envelope(&idle, &tr, &ActuatorBiasModel::default(), &StrokeGain::default()).unwrap();
        assert_eq!(env.amplitude, 0.0);
    }

    #[test]
    fn amplitude_saturates() {
        let tr = TransmissionModel::new(1e-3, 0.0).unwrap();
        let full = PwmSignal::new(5.0, 1.0).unwrap();
        let g = StrokeGain::default();
        let env = stroke_envelope(&full, &tr, &ActuatorBiasModel::default(), &g).unwrap();
        assert_eq!(env.amplitude, g.max_amplitude);
    }

    #[test]
    fn tune_examples() {
        let m = ActuatorBiasModel::default();
        let tr = TransmissionModel::new(1e-3, 0.3e-3).unwrap();
        assert_eq!(tune_bias(&pwm(1.0), &m, &tr).unwrap().bias_displacement, 0.0);

        let tuned = tune_bias(&pwm(5.0), &m, &tr).unwrap();
        assert_relative_eq!(tuned.bias_displacement, 0.2e-3, max_relative = 1e-12);
        let g = StrokeGain::default();
        assert_eq!(stroke_envelope(&pwm(5.0), &tuned, &m, &g).unwrap().mean_angle, 0.0);
        // a transmission tuned for 5 Hz is off at 10 Hz
        assert!(stroke_envelope(&pwm(10.0), &tuned, &m, &g).unwrap().mean_angle != 0.0);
    }

    #[test]
    fn pwm_validation() {
        assert!(PwmSignal::new(0.0, 0.1).is_err());
        assert!(PwmSignal::new(5.0, 1.1).is_err());
        assert!(PwmSignal::new(5.0, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn tuning_cancels_exactly(
            f in 0.1..40.0f64,
            other in 1.5..40.0f64,
            gain in 1e-3..0.2f64,
            offset in 1e-4..5e-3f64,
        ) {
            let m = ActuatorBiasModel { bias_gain: gain, threshold: 1.0 };
            let tr = TransmissionModel::new(offset, 0.0).unwrap();
            let p = PwmSignal::new(f, 0.1).unwrap();
            let tuned = tune_bias(&p, &m, &tr).unwrap();
            let g = StrokeGain::default();
            prop_assert_eq!(stroke_envelope(&p, &tuned, &m, &g).unwrap().mean_angle, 0.0);
            if (other - f).abs() > 1e-6 && f > 1.0 {
                let q = PwmSignal::new(other, 0.1).unwrap();
                prop_assert!(stroke_envelope(&q, &tuned, &m, &g).unwrap().mean_angle != 0.0);
            }
        }

        #[test]
        fn bias_monotone_nonnegative(f1 in 0.0..40.0f64, df in 0.0..10.0f64, gain in 0.0..0.2f64) {
            let m = ActuatorBiasModel { bias_gain: gain, threshold: 1.0 };
            let a = accumulated_bias(&m, &PwmSignal { frequency: f1 + 1e-9, duty: 0.1, on_voltage: 22.0, on_current: 0.25 });
            let b = accumulated_bias(&m, &PwmSignal { frequency: f1 + 1e-9 + df, duty: 0.1, on_voltage: 22.0, on_current: 0.25 });
            prop_assert!(a >= 0.0);
            prop_assert!(b >= a);
        }

        #[test]
        fn amplitude_monotone_in_duty(d1 in 0.0..1.0f64, d2 in 0.0..1.0f64) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let tr = TransmissionModel::new(1e-3, 0.0).unwrap();
            let m = ActuatorBiasModel::default();
            let g = StrokeGain::default();
            let a = stroke_envelope(&PwmSignal::new(5.0, lo).unwrap(), &tr, &m, &g).unwrap();
            let b = stroke_envelope(&PwmSignal::new(5.0, hi).unwrap(), &tr, &m, &g).unwrap();
            prop_assert!(b.amplitude >= a.amplitude);
        }

        #[test]
        fn bias_angle_round_trip(db in -1e-3..1e-3f64, offset in 1e-4..5e-3f64) {
            let tr = TransmissionModel::new(offset, db).unwrap();
            let phi = bias_angle(&tr).unwrap();
            prop_assert!((phi * offset - db).abs() <= 1e-15 * db.abs().max(1e-300) * 4.0);
        }
    }
}
