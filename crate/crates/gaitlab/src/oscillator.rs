//! Decentralized phase oscillators with ground-reaction-force feedback.
//!
//! Each leg carries one oscillator with phase φ ∈ [0, 2π). The phase rate is
//!
//! ```text
//!   φ̇ = 2π (ω − σ F (cos φ + ξ))
//! ```
//!
//! where F is the normalized ground reaction force at the oscillator's own
//! foot, ω is the nominal frequency in cycles/s, σ a feedback gain and ξ an
//! offset that caps φ̇ at 2πω and moves the loaded fixed point into the
//! middle of the stance interval [π, 2π). With F = 0 the oscillator is a
//! plain clock.
//!
//! The coupling mode selects between this local-feedback form, a pure clock
//! that ignores feedback entirely, and an all-to-all diffusive variant kept
//! for comparison experiments.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::leg::Leg;
use crate::wrap_angle;

/// Derivative magnitude below which a fixed point counts as marginal,
/// in rad/s per rad.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum OscillatorError {
    #[error("invalid oscillator parameter {name}: {value} ({reason})")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("ground reaction force for {leg} out of range: {value} (must be finite and in [0, 1])")]
    InvalidGrf { leg: &'static str, value: f64 },
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("phase for {leg} is not finite: {value}")]
    NonFinitePhase { leg: &'static str, value: f64 },
}

/// Oscillator parameter triple (ω, σ, ξ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Nominal frequency, cycles per second. Strictly positive.
    pub omega: f64,
    /// Feedback gain, dimensionless. Non-negative.
    pub sigma: f64,
    /// Feedback offset, dimensionless. Non-negative.
    pub xi: f64,
}

impl OscillatorParams {
    pub fn new(omega: f64, sigma: f64, xi: f64) -> Result<Self, OscillatorError> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(OscillatorError::InvalidParam {
                name: "omega",
                value: omega,
                reason: "must be finite and > 0",
            });
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(OscillatorError::InvalidParam {
                name: "sigma",
                value: sigma,
                reason: "must be finite and >= 0",
            });
        }
        if !xi.is_finite() || xi < 0.0 {
            return Err(OscillatorError::InvalidParam {
                name: "xi",
                value: xi,
                reason: "must be finite and >= 0",
            });
        }
        Ok(Self { omega, sigma, xi })
    }

    /// Same parameters with the feedback gain replaced.
    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }
}

/// Velocity-dependent parameter schedule.
///
/// Low speed commands (|v_x| ≤ 0.5 m/s) select the standing regime
/// (ω, σ, ξ) = (1, 4, 1), which places a stable fixed point in the middle of
/// stance; otherwise frequency ramps as min{1.5 + |v_x|, 4} with (σ, ξ) =
/// (1, 0).
pub fn schedule_params(v_x: f64) -> OscillatorParams {
    let v = v_x.abs();
    if v <= 0.5 {
        OscillatorParams {
            omega: 1.0,
            sigma: 4.0,
            xi: 1.0,
        }
    } else {
        OscillatorParams {
            omega: (1.5 + v).min(4.0),
            sigma: 1.0,
            xi: 0.0,
        }
    }
}

/// [`schedule_params`] with an optional linear blend of width `blend_width`
/// (in m/s) centred on the |v_x| = 0.5 switch. A width of 0 reproduces the
/// discontinuous case expression exactly.
pub fn schedule_params_blended(v_x: f64, blend_width: f64) -> OscillatorParams {
    if blend_width <= 0.0 {
        return schedule_params(v_x);
    }
    let v = v_x.abs();
    let lo = 0.5 - blend_width / 2.0;
    let hi = 0.5 + blend_width / 2.0;
    if v <= lo {
        schedule_params(0.0)
    } else if v >= hi {
        schedule_params(v.max(0.5 + f64::EPSILON))
    } else {
        let t = (v - lo) / (hi - lo);
        let a = schedule_params(0.0);
        let b = OscillatorParams {
            omega: (1.5 + v).min(4.0),
            sigma: 1.0,
            xi: 0.0,
        };
        OscillatorParams {
            omega: a.omega + t * (b.omega - a.omega),
            sigma: a.sigma + t * (b.sigma - a.sigma),
            xi: a.xi + t * (b.xi - a.xi),
        }
    }
}

/// How the oscillators are driven.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CouplingMode {
    /// Feedback ignored: every phase grows at the constant rate 2πω.
    Clock,
    /// Local feedback only: each oscillator sees the ground reaction force
    /// of its own leg and nothing else.
    Decentralized,
    /// All-to-all diffusive phase coupling (comparison variant). Ignores
    /// ground reaction forces; `gain` is in rad/s.
    Diffusive { gain: f64 },
}

/// Per-leg normalized ground reaction forces.
///
/// Values are fractions of body weight, clamped to [0, 1] by the plant;
/// construction rejects anything outside that range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfVector([f64; 4]);

impl GrfVector {
    pub const ZERO: GrfVector = GrfVector([0.0; 4]);

    pub fn new(values: [f64; 4]) -> Result<Self, OscillatorError> {
        for (leg, &v) in Leg::ALL.iter().zip(values.iter()) {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(OscillatorError::InvalidGrf {
                    leg: leg.label(),
                    value: v,
                });
            }
        }
        Ok(Self(values))
    }

    pub fn get(&self, leg: Leg) -> f64 {
        self.0[leg.index()]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Index<Leg> for GrfVector {
    type Output = f64;
    fn index(&self, leg: Leg) -> &f64 {
        &self.0[leg.index()]
    }
}

/// Four per-leg phases plus the active parameters and coupling mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorBank {
    phases: [f64; 4],
    pub params: OscillatorParams,
    pub coupling_mode: CouplingMode,
}

impl OscillatorBank {
    /// Build a bank from raw phases (wrapped to [0, 2π)).
    pub fn new(
        phases: [f64; 4],
        params: OscillatorParams,
        coupling_mode: CouplingMode,
    ) -> Result<Self, OscillatorError> {
        for (leg, &p) in Leg::ALL.iter().zip(phases.iter()) {
            if !p.is_finite() {
                return Err(OscillatorError::NonFinitePhase {
                    leg: leg.label(),
                    value: p,
                });
            }
        }
        Ok(Self {
            phases: phases.map(wrap_angle),
            params,
            coupling_mode,
        })
    }

    /// Uniformly random phases in [0, 2π), one draw per leg in leg order.
    pub fn random<R: rand::Rng>(
        rng: &mut R,
        params: OscillatorParams,
        coupling_mode: CouplingMode,
    ) -> Self {
        let phases = [(); 4].map(|_| rng.random_range(0.0..TAU));
        Self {
            phases,
            params,
            coupling_mode,
        }
    }

    pub fn phases(&self) -> [f64; 4] {
        self.phases
    }

    pub fn phase(&self, leg: Leg) -> f64 {
        self.phases[leg.index()]
    }

    /// Copy of the bank with one phase replaced (wrapped).
    pub fn with_phase(mut self, leg: Leg, phase: f64) -> Self {
        self.phases[leg.index()] = wrap_angle(phase);
        self
    }

    pub fn with_params(mut self, params: OscillatorParams) -> Self {
        self.params = params;
        self
    }
}

/// Instantaneous phase rate in rad/s: `2π (ω − σ F (cos φ + ξ))`.
///
/// Pure function; `phase` may be any real angle, `grf` must lie in [0, 1].
pub fn phase_rate(phase: f64, grf: f64, params: &OscillatorParams) -> f64 {
    TAU * (params.omega - params.sigma * grf * (phase.cos() + params.xi))
}

/// Advance every oscillator by one explicit Euler step of length `dt`.
///
/// In `Decentralized` mode each phase uses only its own leg's ground
/// reaction force; in `Clock` mode feedback is ignored; the `Diffusive`
/// variant couples all phases directly and ignores the forces. Resulting
/// phases are wrapped to [0, 2π).
pub fn step_oscillator(
    bank: &OscillatorBank,
    grf: &GrfVector,
    dt: f64,
) -> Result<OscillatorBank, OscillatorError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(OscillatorError::InvalidTimeStep(dt));
    }
    let p = &bank.params;
    let phases = bank.phases;
    let rates = match bank.coupling_mode {
        CouplingMode::Clock => [TAU * p.omega; 4],
        CouplingMode::Decentralized => {
            let mut r = [0.0; 4];
            for i in 0..4 {
                r[i] = phase_rate(phases[i], grf.0[i], p);
            }
            r
        }
        CouplingMode::Diffusive { gain } => {
            let mut r = [0.0; 4];
            for i in 0..4 {
                let coupling: f64 = (0..4).map(|j| (phases[j] - phases[i]).sin()).sum();
                r[i] = TAU * p.omega + gain * coupling / 4.0;
            }
            r
        }
    };
    let mut next = *bank;
    for i in 0..4 {
        next.phases[i] = wrap_angle(phases[i] + rates[i] * dt);
    }
    Ok(next)
}

/// Observation encoding `[sin φ_i, cos φ_i]` for the four legs in leg order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseObservation(pub [f64; 8]);

impl PhaseObservation {
    /// (sin, cos) pair for one leg.
    pub fn for_leg(&self, leg: Leg) -> (f64, f64) {
        let i = leg.index();
        (self.0[2 * i], self.0[2 * i + 1])
    }

    pub fn as_array(&self) -> [f64; 8] {
        self.0
    }
}

/// Encode the bank's phases as interleaved `[sin φ, cos φ]` per leg.
pub fn encode_observation(bank: &OscillatorBank) -> PhaseObservation {
    let mut obs = [0.0; 8];
    for (i, &phi) in bank.phases.iter().enumerate() {
        obs[2 * i] = phi.sin();
        obs[2 * i + 1] = phi.cos();
    }
    PhaseObservation(obs)
}

/// Stability of a fixed point of the phase dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// A phase where φ̇ = 0 under a constant load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    /// Phase in [0, 2π).
    pub phase: f64,
    pub stability: Stability,
}

/// All fixed points of `φ̇ = 2π(ω − σ F (cos φ + ξ))` for a constant load.
///
/// Solves `cos φ* = ω/(σF) − ξ` in closed form. Returns an empty list when
/// σF = 0 (the rate is the constant 2πω > 0) or when the cosine equation has
/// no solution. Stability follows the sign of `d φ̇/dφ = 2π σ F sin φ*`:
/// negative is stable, positive unstable, and below [`MARGINAL_TOLERANCE`]
/// in magnitude marginal.
pub fn find_fixed_points(params: &OscillatorParams, grf: f64) -> Vec<FixedPoint> {
    let sf = params.sigma * grf;
    if sf == 0.0 {
        return Vec::new();
    }
    let c = params.omega / sf - params.xi;
    if c.abs() > 1.0 {
        return Vec::new();
    }
    let root = c.clamp(-1.0, 1.0).acos(); // in [0, π]
    let mut candidates = vec![root];
    let mirrored = wrap_angle(TAU - root);
    if (mirrored - root).abs() > 1e-12 {
        candidates.push(mirrored);
    }
    candidates
        .into_iter()
        .map(|phi| {
            let slope = TAU * sf * phi.sin();
            let stability = if slope.abs() < MARGINAL_TOLERANCE {
                Stability::Marginal
            } else if slope < 0.0 {
                Stability::Stable
            } else {
                Stability::Unstable
            };
            FixedPoint {
                phase: phi,
                stability,
            }
        })
        .collect()
}
