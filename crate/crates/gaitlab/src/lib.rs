//! Decentralized phase-oscillator quadruped locomotion toolkit.
//!
//! Four phase oscillators, one per leg, are coupled to the body only through
//! the ground reaction force felt at their own foot. A quasi-static surrogate
//! plant closes the loop: oscillator phases select stance/swing, stance feet
//! carry the body weight, and the resulting per-leg loads feed back into the
//! oscillator dynamics. On top of that sit phase-based reward evaluation,
//! touchdown-based gait classification, and a batch experiment harness with
//! deterministic seeding.
//!
//! Batch execution is data-parallel via rayon when the `parallel` feature is
//! enabled (the default); the sequential fallback produces byte-identical
//! results.

pub mod config;
pub mod gait;
pub mod harness;
pub mod leg;
pub mod oscillator;
pub mod plant;
pub mod rewards;

pub use leg::{Leg, LegMode};
pub use oscillator::{
    encode_observation, find_fixed_points, phase_rate, schedule_params, step_oscillator,
    CouplingMode, FixedPoint, GrfVector, OscillatorBank, OscillatorError, OscillatorParams,
    PhaseObservation, Stability,
};

use std::f64::consts::TAU;

/// Wrap an angle to `[0, 2π)` using floored modulo.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Signed circular difference `a - b` mapped to `(-π, π]`.
pub fn circular_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

/// Circular mean of a set of angles, in `[0, 2π)`.
///
/// When the resultant vector vanishes the mean is ill-defined; 0 is returned.
pub fn circular_mean(angles: &[f64]) -> f64 {
    let (s, c) = angles
        .iter()
        .fold((0.0, 0.0), |(s, c), &a| (s + a.sin(), c + a.cos()));
    wrap_angle(s.atan2(c))
}
