//! Emulated motion capture and the velocity post-processing chain:
//! first-difference differentiation followed by a linear-phase FIR low-pass.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::angle::wrap;
use crate::dynamics::RobotState;
use crate::error::{domain, Error, Result};
use crate::SAMPLE_RATE_HZ;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MocapSample {
    /// s
    pub t: f64,
    /// m
    pub r1: f64,
    /// m
    pub r2: f64,
    /// rad
    pub psi: f64,
}

/// Standard deviations of the measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MocapNoise {
    /// m
    pub position: f64,
    /// rad
    pub yaw: f64,
}

impl Default for MocapNoise {
    fn default() -> Self {
        Self {
            position: 5e-5,
            yaw: 1e-3,
        }
    }
}

impl MocapNoise {
    pub fn none() -> Self {
        Self {
            position: 0.0,
            yaw: 0.0,
        }
    }
}

/// Seeded pose sampler.
#[derive(Debug, Clone)]
pub struct Mocap {
    noise: MocapNoise,
    position: Option<Normal<f64>>,
    yaw: Option<Normal<f64>>,
    rng: ChaCha8Rng,
    mirror: bool,
}

impl Mocap {
    pub fn new(noise: MocapNoise, seed: u64) -> Result<Self> {
        let normal = |sigma: f64, what: &str| -> Result<Option<Normal<f64>>> {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(domain(format!("{what} noise must be >= 0, got {sigma}")));
            }
            Ok((sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma")))
        };
        Ok(Self {
            noise,
            position: normal(noise.position, "position")?,
            yaw: normal(noise.yaw, "yaw")?,
            rng: ChaCha8Rng::seed_from_u64(seed),
            mirror: false,
        })
    }

    /// Negate the lateral and yaw noise draws, so a mirrored plant sampled
    /// with the same seed yields the mirror image of the unmirrored stream.
    pub fn mirrored(mut self, on: bool) -> Self {
        self.mirror = on;
        self
    }

    pub fn noise(&self) -> MocapNoise {
        self.noise
    }

    /// Measure `state` at time `t`.
    pub fn sample(&mut self, state: &RobotState, t: f64) -> MocapSample {
        let mut s = MocapSample {
            t,
            r1: state.position[0],
            r2: state.position[1],
            psi: state.yaw,
        };
        let sign = if self.mirror { -1.0 } else { 1.0 };
        if let Some(n) = &self.position {
            s.r1 += n.sample(&mut self.rng);
            s.r2 += sign * n.sample(&mut self.rng);
        }
        if let Some(n) = &self.yaw {
            s.psi = wrap(s.psi + sign * n.sample(&mut self.rng));
        }
        s
    }
}

/// Inertial-frame rates estimated from a pose series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VelocitySeries {
    pub t: Vec<f64>,
    /// ṙ₁, m·s⁻¹
    pub v1: Vec<f64>,
    /// ṙ₂, m·s⁻¹
    pub v2: Vec<f64>,
    /// ψ̇, rad·s⁻¹
    pub omega: Vec<f64>,
}

impl VelocitySeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Sampling interval of a uniformly spaced series.
pub fn uniform_spacing(samples: &[MocapSample]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooShort {
            len: samples.len(),
            min: 2,
        });
    }
    let dt = samples[1].t - samples[0].t;
    if !(dt > 0.0) {
        return Err(Error::NonUniformSpacing {
            index: 1,
            spacing: dt,
            expected: 1.0 / SAMPLE_RATE_HZ,
        });
    }
    for (i, w) in samples.windows(2).enumerate() {
        let d = w[1].t - w[0].t;
        if (d - dt).abs() > 1e-6 * dt {
            return Err(Error::NonUniformSpacing {
                index: i + 1,
                spacing: d,
                expected: dt,
            });
        }
    }
    Ok(dt)
}

/// First-difference derivative scaled by the sample rate. Yaw increments are
/// wrapped before scaling; the first output repeats the second so lengths match.
pub fn differentiate(samples: &[MocapSample]) -> Result<VelocitySeries> {
    let dt = uniform_spacing(samples)?;
    let rate = 1.0 / dt;
    let n = samples.len();
    let mut out = VelocitySeries {
        t: samples.iter().map(|s| s.t).collect(),
        v1: Vec::with_capacity(n),
        v2: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
    };
    for w in samples.windows(2) {
        out.v1.push((w[1].r1 - w[0].r1) * rate);
        out.v2.push((w[1].r2 - w[0].r2) * rate);
        out.omega.push(wrap(w[1].psi - w[0].psi) * rate);
    }
    out.v1.insert(0, out.v1[0]);
    out.v2.insert(0, out.v2[0]);
    out.omega.insert(0, out.omega[0]);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hamming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirSpec {
    /// Number of taps minus one.
    pub order: usize,
    /// Hz
    pub cutoff: f64,
    /// Hz
    pub sample_rate: f64,
    pub window: Window,
}

impl Default for FirSpec {
    fn default() -> Self {
        Self {
            order: 1000,
            cutoff: 40.0,
            sample_rate: SAMPLE_RATE_HZ,
            window: Window::Hamming,
        }
    }
}

impl FirSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0) {
            return Err(domain(format!("sample rate must be > 0, got {}", self.sample_rate)));
        }
        if !(self.cutoff > 0.0 && self.cutoff < self.sample_rate / 2.0) {
            return Err(domain(format!(
                "cutoff must lie in (0, {}) Hz, got {}",
                self.sample_rate / 2.0,
                self.cutoff
            )));
        }
        if self.order == 0 || !self.order.is_multiple_of(2) {
            return Err(domain(format!("filter order must be even and > 0, got {}", self.order)));
        }
        Ok(())
    }
}

/// Windowed-sinc low-pass filter, normalised to unit DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn design(spec: &FirSpec) -> Result<Self> {
        spec.validate()?;
        let m = spec.order;
        let half = (m / 2) as f64;
        let fc = spec.cutoff / spec.sample_rate;
        let mut taps: Vec<f64> = (0..=m)
            .map(|n| {
                // centred index keeps both factors exactly even in x
                let x = n as f64 - half;
                let ideal = if x == 0.0 {
                    2.0 * fc
                } else {
                    (2.0 * PI * fc * x).sin() / (PI * x)
                };
                let window = match spec.window {
                    Window::Hamming => 0.54 + 0.46 * (2.0 * PI * x / m as f64).cos(),
                };
                ideal * window
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|h| *h /= sum);
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    /// Zero-phase application: convolve and shift by `order/2` samples, with
    /// the series extended by its end values.
    pub fn apply(&self, series: &[f64]) -> Result<Vec<f64>> {
        let m = self.order();
        if series.len() < m + 1 {
            return Err(Error::TooShort {
                len: series.len(),
                min: m + 1,
            });
        }
        let n = series.len() as isize;
        let half = (m / 2) as isize;
        let out = (0..n)
            .map(|i| {
                self.taps
                    .iter()
                    .enumerate()
                    .map(|(k, h)| {
                        let j = (i + half - k as isize).clamp(0, n - 1);
                        h * series[j as usize]
                    })
                    .sum()
            })
            .collect();
        Ok(out)
    }
}

pub fn fir_lowpass(series: &[f64], spec: &FirSpec) -> Result<Vec<f64>> {
    FirFilter::design(spec)?.apply(series)
}

/// Differentiate then low-pass each rate channel.
pub fn filtered_velocities(samples: &[MocapSample], spec: &FirSpec) -> Result<VelocitySeries> {
    let raw = differentiate(samples)?;
    let filter = FirFilter::design(spec)?;
    Ok(VelocitySeries {
        v1: filter.apply(&raw.v1)?,
        v2: filter.apply(&raw.v2)?,
        omega: filter.apply(&raw.omega)?,
        t: raw.t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const DT: f64 = 1.0 / SAMPLE_RATE_HZ;

    fn series(n: usize, f: impl Fn(f64) -> (f64, f64, f64)) -> Vec<MocapSample> {
        (0..n)
            .map(|i| {
                let t = i as f64 * DT;
                let (r1, r2, psi) = f(t);
                MocapSample { t, r1, r2, psi }
            })
            .collect()
    }

    #[test]
    fn noiseless_sample_is_exact() {
        let mut m = Mocap::new(MocapNoise::none(), 1).unwrap();
        let s = RobotState::at_pose([0.1, -0.2], 0.5);
        let x = m.sample(&s, 2.0);
        assert_eq!((x.r1, x.r2, x.psi, x.t), (0.1, -0.2, 0.5, 2.0));
    }

    #[test]
    fn seeded_samples_repeat() {
        let noise = MocapNoise { position: 1e-4, yaw: 1e-3 };
        let s = RobotState::at_pose([0.1, -0.2], 0.5);
        let mut a = Mocap::new(noise, 42).unwrap();
        let mut b = Mocap::new(noise, 42).unwrap();
        for i in 0..50 {
            assert_eq!(a.sample(&s, i as f64), b.sample(&s, i as f64));
        }
        assert!(Mocap::new(MocapNoise { position: -1.0, yaw: 0.0 }, 0).is_err());
    }

    #[test]
    fn noisy_mean_is_unbiased() {
        let sigma = 1e-4;
        let noise = MocapNoise { position: sigma, yaw: 0.0 };
        let mut m = Mocap::new(noise, 7).unwrap();
        let s = RobotState::at_pose([0.1, -0.2], 0.0);
        let n = 100_000;
        let mean = (0..n).map(|_| m.sample(&s, 0.0).r1).sum::<f64>() / n as f64;
        assert!((mean - 0.1).abs() < 3.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn differentiate_constant_pose() {
        let v = differentiate(&series(10, |_| (0.1, 0.2, 3.0))).unwrap();
        assert_eq!(v.len(), 10);
        assert!(v.v1.iter().chain(&v.v2).chain(&v.omega).all(|&x| x == 0.0));
    }

    #[test]
    fn differentiate_ramp() {
        let v = differentiate(&series(500, |t| (0.0151 * t, 0.0, 0.0))).unwrap();
        for x in &v.v1 {
            assert_relative_eq!(*x, 0.0151, max_relative = 1e-9);
        }
    }

    #[test]
    fn differentiate_across_wrap() {
        let rate = 0.8;
        let v = differentiate(&series(1000, |t| (0.0, 0.0, wrap(3.0 + rate * t)))).unwrap();
        for w in &v.omega {
            assert!((w - rate).abs() < 1e-9, "omega {w}");
        }
    }

    #[test]
    fn differentiate_errors() {
        assert!(matches!(
            differentiate(&series(1, |_| (0.0, 0.0, 0.0))),
            Err(Error::TooShort { .. })
        ));
        let mut s = series(10, |_| (0.0, 0.0, 0.0));
        s[5].t += 1e-3;
        assert!(matches!(differentiate(&s), Err(Error::NonUniformSpacing { .. })));
    }

    #[test]
    fn fir_spec_validation() {
        assert!(FirSpec::default().validate().is_ok());
        assert!(FirSpec { cutoff: 125.0, ..FirSpec::default() }.validate().is_err());
        assert!(FirSpec { order: 999, ..FirSpec::default() }.validate().is_err());
        assert!(FirSpec { cutoff: 0.0, ..FirSpec::default() }.validate().is_err());
    }

    #[test]
    fn fir_symmetric_and_unit_dc() {
        let f = FirFilter::design(&FirSpec::default()).unwrap();
        let h = f.taps();
        assert_eq!(h.len(), 1001);
        for k in 0..h.len() {
            assert!((h[k] - h[h.len() - 1 - k]).abs() <= 1e-12);
        }
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fir_constant_passthrough() {
        let x = vec![3.25; 1500];
        let y = fir_lowpass(&x, &FirSpec::default()).unwrap();
        assert_eq!(y.len(), x.len());
        for v in y {
            assert!((v - 3.25).abs() < 1e-12);
        }
    }

    #[test]
    fn fir_short_series() {
        assert!(matches!(
            fir_lowpass(&[1.0; 1000], &FirSpec::default()),
            Err(Error::TooShort { len: 1000, min: 1001 })
        ));
    }

    #[test]
    fn fir_has_no_group_delay() {
        // a slow sinusoid comes out in phase with the input
        let x: Vec<f64> = (0..3000).map(|i| (2.0 * PI * 0.5 * i as f64 * DT).sin()).collect();
        let y = fir_lowpass(&x, &FirSpec::default()).unwrap();
        for i in 1000..2000 {
            assert!((y[i] - x[i]).abs() < 1e-3);
        }
    }
}
