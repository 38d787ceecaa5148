//! Planar simulation and control of surface-swimming microrobots driven by
//! undulating-tail (anguilliform) propulsors.
//!
//! The crate is organised bottom-up:
//!
//! * [`hydro`]: fluid properties, tail geometry, the calibrated mean-thrust map and
//!   the quadratic drag model.
//! * [`actuation`]: PWM excitation, SMA steady-state bias and the stroke envelope
//!   produced by the four-bar transmission.
//! * [`dynamics`]: 3-DOF planar rigid-body plant for single and dual propulsor robots.
//! * [`sensing`]: emulated motion-capture samples, discrete differentiation and the
//!   linear-phase FIR low-pass filter.
//! * [`control`]: lateral PI, heading P and the differential duty-cycle mapping.
//! * [`harness`]: run configuration, experiment protocols, metrics and persistence.
//!
//! All quantities are SI internally (m, s, kg, N, rad). CSV outputs use mm where
//! the column name says so.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod angle;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod hydro;
pub mod sensing;

pub use error::{Error, Result};

/// Clock shared by the motion-capture stream, the controller and the physics.
pub const SAMPLE_RATE_HZ: f64 = 250.0;
