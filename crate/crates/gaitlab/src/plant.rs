//! Quasi-static quadruped surrogate.
//!
//! The surrogate replaces both the learned policy and the rigid-body
//! simulator with a fixed phase-to-kinematics mapping: oscillator phases
//! select stance or swing per leg, stance feet stay pinned to the ground
//! while the body advances over them, and swing feet return to a nominal
//! offset ahead of the body. Normalized ground reaction forces come from a
//! compliant-leg share: each stance leg behaves like a spring whose load
//! falls off with the horizontal hip-to-foot distance, and the shares are
//! normalized so the stance set carries exactly the body weight. As the
//! body advances over pinned feet the shares shift fore and aft, which is
//! the only channel through which the per-leg oscillators can interact.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::leg::{Leg, LegMode};
use crate::oscillator::{GrfVector, OscillatorBank};
use crate::wrap_angle;

/// Nominal base height of the surrogate body, m. The quasi-static plant
/// holds this exactly; it exists as a proxy channel for height-tracking
/// rewards.
pub const NOMINAL_BASE_HEIGHT: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum PlantError {
    #[error("non-finite body state ({field} = {value})")]
    NonFiniteState { field: &'static str, value: f64 },
    #[error("time step must be finite and positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("invalid plant config: {field} must be positive, got {value}")]
    InvalidConfig { field: &'static str, value: f64 },
}

/// Geometry and failure parameters of the surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Half the hip-to-hip distance along the body axis, m.
    pub body_half_length: f64,
    /// Half the lateral hip spacing, m.
    pub body_half_width: f64,
    /// Swing-target lead as a fraction of the expected stance travel
    /// `v_x / (2ω)`: feet land this fraction of a stance stroke ahead of
    /// nominal, so 0.5 centers the stroke under the hip at every speed.
    pub step_length_gain: f64,
    /// Distance scale of the compliant-leg load falloff, m. A stance foot
    /// at this hip distance carries half the raw share of one directly
    /// under its hip.
    pub load_softness: f64,
    /// Support-region margin for failure detection, m.
    pub failure_margin: f64,
    /// Continuous unsupported time tolerated before failing, s.
    pub failure_grace: f64,
    /// Time constant for decay of perturbation-induced excess velocity, s.
    pub perturb_decay_tau: f64,
    /// Standard deviation of optional additive GRF noise (fraction of body
    /// weight); 0 disables the noise path entirely.
    pub grf_noise_std: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            body_half_length: 0.19,
            body_half_width: 0.10,
            step_length_gain: 0.5,
            load_softness: 0.10,
            failure_margin: 0.02,
            failure_grace: 0.2,
            perturb_decay_tau: 0.25,
            grf_noise_std: 0.0,
        }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), PlantError> {
        let positive = [
            ("body_half_length", self.body_half_length),
            ("body_half_width", self.body_half_width),
            ("step_length_gain", self.step_length_gain),
            ("load_softness", self.load_softness),
            ("failure_margin", self.failure_margin),
            ("failure_grace", self.failure_grace),
            ("perturb_decay_tau", self.perturb_decay_tau),
        ];
        for (field, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(PlantError::InvalidConfig { field, value });
            }
        }
        if !self.grf_noise_std.is_finite() || self.grf_noise_std < 0.0 {
            return Err(PlantError::InvalidConfig {
                field: "grf_noise_std",
                value: self.grf_noise_std,
            });
        }
        Ok(())
    }

    /// Nominal foot offset in the body frame (x forward, y left).
    pub fn nominal_offset(&self, leg: Leg) -> [f64; 2] {
        let (l, w) = (self.body_half_length, self.body_half_width);
        match leg {
            Leg::RightFront => [l, -w],
            Leg::LeftFront => [l, w],
            Leg::RightHind => [-l, -w],
            Leg::LeftHind => [-l, w],
        }
    }
}

/// Horizontal body state of the surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    /// Center-of-mass horizontal position, world frame, m.
    pub com_position: [f64; 2],
    /// Heading angle, rad, wrapped to [0, 2π).
    pub heading: f64,
    /// Actual horizontal velocity, world frame, m/s.
    pub velocity: [f64; 2],
    /// Commanded forward velocity, m/s (body frame x).
    pub commanded_v_x: f64,
    /// Commanded yaw rate, rad/s.
    pub commanded_yaw_rate: f64,
}

impl BodyState {
    /// Stationary body at the origin with the given commands.
    pub fn at_rest(commanded_v_x: f64, commanded_yaw_rate: f64) -> Self {
        let heading = 0.0;
        Self {
            com_position: [0.0, 0.0],
            heading,
            velocity: rotate([commanded_v_x, 0.0], heading),
            commanded_v_x,
            commanded_yaw_rate,
        }
    }

    fn validate(&self) -> Result<(), PlantError> {
        let fields = [
            ("com_x", self.com_position[0]),
            ("com_y", self.com_position[1]),
            ("heading", self.heading),
            ("vel_x", self.velocity[0]),
            ("vel_y", self.velocity[1]),
            ("commanded_v_x", self.commanded_v_x),
            ("commanded_yaw_rate", self.commanded_yaw_rate),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(PlantError::NonFiniteState { field, value });
            }
        }
        Ok(())
    }
}

/// Per-leg kinematic state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegState {
    pub mode: LegMode,
    /// Foot position, world frame, m. Stance feet hold this position
    /// between touchdown and liftoff.
    pub foot_position: [f64; 2],
    /// Nominal offset in the body frame, m.
    pub nominal_offset: [f64; 2],
}

impl LegState {
    /// Foot position expressed in the body frame.
    pub fn foot_body(&self, body: &BodyState) -> [f64; 2] {
        let d = sub(self.foot_position, body.com_position);
        rotate(d, -body.heading)
    }
}

/// Stance iff the phase lies in [π, 2π); the boundary π is stance.
pub fn leg_mode(phase: f64) -> LegMode {
    if phase >= PI {
        LegMode::Stance
    } else {
        LegMode::Swing
    }
}

/// Legs at their nominal offsets around the body, modes taken from the
/// oscillator phases.
pub fn init_legs(body: &BodyState, bank: &OscillatorBank, config: &PlantConfig) -> [LegState; 4] {
    Leg::ALL.map(|leg| {
        let nominal = config.nominal_offset(leg);
        LegState {
            mode: leg_mode(bank.phase(leg)),
            foot_position: add(body.com_position, rotate(nominal, body.heading)),
            nominal_offset: nominal,
        }
    })
}

/// Result of the load solve, with a flag telling whether any clamping was
/// applied (the share model never needs it; the flag records the contract).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSolution {
    pub grf: GrfVector,
    pub clamped: bool,
}

/// Distribute the normalized body weight (1.0) among stance feet.
///
/// Each stance leg carries a raw compliant share `1 / (1 + (d/d₀)²)` where
/// d is the horizontal hip-to-foot distance and d₀ the load softness; the
/// shares are normalized so vertical force balance Σf = 1 holds exactly.
/// As the body advances over pinned feet the shares shift toward whichever
/// hips sit over their feet, which reproduces the fore-aft load asymmetry
/// of a body walking over its support. Swing feet carry exactly zero;
/// negative shares cannot occur, and anything out of [0, 1] after
/// normalization is clamped. With no stance feet the result is all zeros.
pub fn load_distribution(
    body: &BodyState,
    legs: &[LegState; 4],
    config: &PlantConfig,
) -> GrfVector {
    load_distribution_detailed(body, legs, config).grf
}

/// [`load_distribution`] exposing the clamping flag.
pub fn load_distribution_detailed(
    body: &BodyState,
    legs: &[LegState; 4],
    config: &PlantConfig,
) -> LoadSolution {
    let d0_sq = config.load_softness * config.load_softness;
    let mut raw = [0.0; 4];
    let mut total = 0.0;
    for leg in Leg::ALL {
        let i = leg.index();
        if legs[i].mode != LegMode::Stance {
            continue;
        }
        let hip = add(body.com_position, rotate(legs[i].nominal_offset, body.heading));
        let d = sub(legs[i].foot_position, hip);
        let share = 1.0 / (1.0 + (d[0] * d[0] + d[1] * d[1]) / d0_sq);
        raw[i] = share;
        total += share;
    }
    if total == 0.0 {
        return LoadSolution {
            grf: GrfVector::ZERO,
            clamped: false,
        };
    }
    let mut clamped = false;
    let mut forces = [0.0; 4];
    for i in 0..4 {
        let f = raw[i] / total;
        if !(0.0..=1.0).contains(&f) {
            clamped = true;
        }
        forces[i] = f.clamp(0.0, 1.0);
    }
    LoadSolution {
        grf: GrfVector::new(forces).expect("normalized shares in range"),
        clamped,
    }
}

/// Advance the surrogate by one step of length `dt` using the bank's
/// current phases for stance/swing selection.
///
/// Stance feet stay world-fixed; swing feet close the remaining distance to
/// their target (nominal offset led by commanded velocity times the step
/// length gain) in proportion to the remaining swing phase, landing on
/// target as the phase reaches π. The body integrates its commanded
/// velocity plus an exponentially decaying perturbation excess.
pub fn step_plant(
    body: &BodyState,
    legs: &[LegState; 4],
    bank: &OscillatorBank,
    dt: f64,
    config: &PlantConfig,
) -> Result<(BodyState, [LegState; 4], GrfVector), PlantError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(PlantError::InvalidTimeStep(dt));
    }
    body.validate()?;

    let heading = wrap_angle(body.heading + body.commanded_yaw_rate * dt);
    let cmd_world_prev = rotate([body.commanded_v_x, 0.0], body.heading);
    let cmd_world = rotate([body.commanded_v_x, 0.0], heading);
    let excess = sub(body.velocity, cmd_world_prev);
    let decay = (-dt / config.perturb_decay_tau).exp();
    let excess = scale(excess, decay);
    let velocity = add(cmd_world, excess);
    let com = add(body.com_position, scale(velocity, dt));
    let new_body = BodyState {
        com_position: com,
        heading,
        velocity,
        commanded_v_x: body.commanded_v_x,
        commanded_yaw_rate: body.commanded_yaw_rate,
    };

    // Stance travel at the commanded speed is v/(2ω); the swing target
    // leads nominal by the configured fraction of it.
    let stance_travel = body.commanded_v_x / (2.0 * bank.params.omega);
    let lead = [stance_travel * config.step_length_gain, 0.0];
    let swing_advance = TAU * bank.params.omega * dt;
    let mut new_legs = *legs;
    for leg in Leg::ALL {
        let i = leg.index();
        let phase = bank.phase(leg);
        let mode = leg_mode(phase);
        new_legs[i].mode = mode;
        if mode == LegMode::Swing {
            let target = add(com, rotate(add(legs[i].nominal_offset, lead), heading));
            let remaining = PI - phase;
            let alpha = if remaining <= swing_advance {
                1.0
            } else {
                swing_advance / remaining
            };
            let delta = sub(target, legs[i].foot_position);
            new_legs[i].foot_position = add(legs[i].foot_position, scale(delta, alpha));
        }
    }

    let grf = load_distribution(&new_body, &new_legs, config);
    Ok((new_body, new_legs, grf))
}

/// Instantaneously add a planar velocity impulse to the body.
pub fn apply_perturbation(body: &BodyState, impulse: [f64; 2]) -> BodyState {
    BodyState {
        velocity: add(body.velocity, impulse),
        ..*body
    }
}

/// Outcome of failure detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FailureOutcome {
    Ok,
    FailedAt(f64),
}

/// Incremental support-region monitor.
///
/// The body is supported while its CoM projection lies within
/// `failure_margin` of the convex hull of the stance feet (degenerate hulls
/// — segments and points — use point/segment distance with the same
/// margin). Failure triggers once the CoM stays unsupported for longer than
/// `failure_grace` continuously.
#[derive(Debug, Clone)]
pub struct FailureDetector {
    margin: f64,
    grace: f64,
    unsupported_since: Option<f64>,
    failed_at: Option<f64>,
}

impl FailureDetector {
    pub fn new(config: &PlantConfig) -> Self {
        Self {
            margin: config.failure_margin,
            grace: config.failure_grace,
            unsupported_since: None,
            failed_at: None,
        }
    }

    /// Feed one sample; returns the failure time once triggered.
    pub fn observe(&mut self, t: f64, com: [f64; 2], stance_feet: &[[f64; 2]]) -> Option<f64> {
        if let Some(f) = self.failed_at {
            return Some(f);
        }
        if support_distance(com, stance_feet) <= self.margin {
            self.unsupported_since = None;
        } else {
            let since = *self.unsupported_since.get_or_insert(t);
            if t - since > self.grace + 1e-9 {
                self.failed_at = Some(t);
                return Some(t);
            }
        }
        None
    }

    pub fn failed_at(&self) -> Option<f64> {
        self.failed_at
    }
}

/// Replay failure detection over recorded samples of
/// (time, CoM, per-leg mode, per-leg foot position).
pub fn detect_failure(
    samples: impl IntoIterator<Item = (f64, [f64; 2], [LegMode; 4], [[f64; 2]; 4])>,
    config: &PlantConfig,
) -> FailureOutcome {
    let mut detector = FailureDetector::new(config);
    for (t, com, modes, feet) in samples {
        let stance: Vec<[f64; 2]> = (0..4)
            .filter(|&i| modes[i] == LegMode::Stance)
            .map(|i| feet[i])
            .collect();
        if let Some(tf) = detector.observe(t, com, &stance) {
            return FailureOutcome::FailedAt(tf);
        }
    }
    FailureOutcome::Ok
}

/// Distance from a point to the convex hull of `points` (0 when inside).
/// Empty input gives +infinity.
pub fn support_distance(p: [f64; 2], points: &[[f64; 2]]) -> f64 {
    match points.len() {
        0 => f64::INFINITY,
        1 => norm(sub(p, points[0])),
        _ => {
            let hull = convex_hull(points);
            match hull.len() {
                1 => norm(sub(p, hull[0])),
                2 => point_segment_distance(p, hull[0], hull[1]),
                _ => {
                    let mut inside = true;
                    let mut min_edge = f64::INFINITY;
                    for i in 0..hull.len() {
                        let a = hull[i];
                        let b = hull[(i + 1) % hull.len()];
                        if cross(sub(b, a), sub(p, a)) < 0.0 {
                            inside = false;
                        }
                        min_edge = min_edge.min(point_segment_distance(p, a, b));
                    }
                    if inside {
                        0.0
                    } else {
                        min_edge
                    }
                }
            }
        }
    }
}

/// Monotone-chain convex hull (counter-clockwise, collinear points dropped).
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let chain = |iter: &mut dyn Iterator<Item = &[f64; 2]>| {
        let mut half: Vec<[f64; 2]> = Vec::new();
        for &p in iter {
            while half.len() >= 2
                && cross(
                    sub(half[half.len() - 1], half[half.len() - 2]),
                    sub(p, half[half.len() - 2]),
                ) <= 0.0
            {
                half.pop();
            }
            half.push(p);
        }
        half
    };
    let mut lower = chain(&mut pts.iter());
    let mut upper = chain(&mut pts.iter().rev());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    if lower.len() < 3 {
        // All collinear: keep the extremes.
        return vec![pts[0], pts[pts.len() - 1]];
    }
    lower
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let len_sq = dot(ab, ab);
    if len_sq == 0.0 {
        return norm(sub(p, a));
    }
    let t = (dot(sub(p, a), ab) / len_sq).clamp(0.0, 1.0);
    norm(sub(p, add(a, scale(ab, t))))
}

pub(crate) fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn scale(a: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] * s, a[1] * s]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn rotate(v: [f64; 2], theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{CouplingMode, OscillatorParams};
    use proptest::prelude::*;

    fn standing_bank(phase: f64) -> OscillatorBank {
        OscillatorBank::new(
            [phase; 4],
            OscillatorParams::new(1.0, 4.0, 1.0).unwrap(),
            CouplingMode::Decentralized,
        )
        .unwrap()
    }

    #[test]
    fn mode_boundaries() {
        assert_eq!(leg_mode(0.0), LegMode::Swing);
        assert_eq!(leg_mode(PI - 1e-12), LegMode::Swing);
        assert_eq!(leg_mode(PI), LegMode::Stance);
        assert_eq!(leg_mode(1.5 * PI), LegMode::Stance);
    }

    #[test]
    fn centered_four_legged_stance_splits_evenly() {
        let config = PlantConfig::default();
        let body = BodyState::at_rest(0.0, 0.0);
        let legs = init_legs(&body, &standing_bank(1.5 * PI), &config);
        let sol = load_distribution_detailed(&body, &legs, &config);
        for leg in Leg::ALL {
            assert!((sol.grf[leg] - 0.25).abs() < 1e-12);
        }
        assert!(!sol.clamped);
    }

    #[test]
    fn diagonal_pair_with_centered_com_splits_half_half() {
        let config = PlantConfig::default();
        let body = BodyState::at_rest(0.0, 0.0);
        let mut legs = init_legs(&body, &standing_bank(1.5 * PI), &config);
        legs[Leg::LeftFront.index()].mode = LegMode::Swing;
        legs[Leg::RightHind.index()].mode = LegMode::Swing;
        let grf = load_distribution(&body, &legs, &config);
        assert!((grf[Leg::RightFront] - 0.5).abs() < 1e-12);
        assert!((grf[Leg::LeftHind] - 0.5).abs() < 1e-12);
        assert_eq!(grf[Leg::LeftFront], 0.0);
        assert_eq!(grf[Leg::RightHind], 0.0);
    }

    #[test]
    fn no_stance_feet_gives_zero_grf() {
        let config = PlantConfig::default();
        let body = BodyState::at_rest(0.0, 0.0);
        let legs = init_legs(&body, &standing_bank(0.5), &config);
        assert_eq!(load_distribution(&body, &legs, &config), GrfVector::ZERO);
    }

    #[test]
    fn stance_age_shifts_load_across_legs() {
        // Three stance feet at different points of their stroke: the foot
        // under its hip carries the most, the freshly landed and nearly
        // lifted feet the least, so load shifts fore-aft as the body
        // advances over a staggered support.
        let config = PlantConfig::default();
        let body = BodyState::at_rest(0.0, 0.0);
        let mut legs = init_legs(&body, &standing_bank(1.5 * PI), &config);
        legs[Leg::LeftFront.index()].mode = LegMode::Swing;
        legs[Leg::RightFront.index()].foot_position[0] += 0.1; // just landed, ahead
        legs[Leg::RightHind.index()].foot_position[0] -= 0.1; // about to lift, behind
        // LeftHind stays at nominal: directly under its hip.
        let grf = load_distribution(&body, &legs, &config);
        assert!((grf.total() - 1.0).abs() < 1e-9);
        assert!(
            grf[Leg::LeftHind] > grf[Leg::RightFront] + 0.05,
            "mid-stroke foot should dominate: {grf:?}"
        );
        assert!((grf[Leg::RightFront] - grf[Leg::RightHind]).abs() < 1e-12);
    }

    proptest! {
        /// Weight conservation holds whenever at least one foot is down.
        #[test]
        fn weight_is_conserved(
            dx in -0.15f64..0.15,
            dy in -0.08f64..0.08,
            drop_leg in 0usize..5,
        ) {
            let config = PlantConfig::default();
            let mut body = BodyState::at_rest(0.0, 0.0);
            body.com_position = [dx, dy];
            let mut legs = init_legs(&BodyState::at_rest(0.0, 0.0), &standing_bank(1.5 * PI), &config);
            if drop_leg < 4 {
                legs[drop_leg].mode = LegMode::Swing;
            }
            let sol = load_distribution_detailed(&body, &legs, &config);
            prop_assert!(!sol.clamped);
            prop_assert!((sol.grf.total() - 1.0).abs() < 1e-9);
            for leg in Leg::ALL {
                let f = sol.grf[leg];
                prop_assert!((0.0..=1.0).contains(&f));
                if legs[leg.index()].mode == LegMode::Swing {
                    prop_assert_eq!(f, 0.0);
                }
            }
        }
    }

    #[test]
    fn standing_at_fixed_point_is_stationary_for_ten_seconds() {
        let config = PlantConfig::default();
        let dt = 0.002;
        let mut body = BodyState::at_rest(0.0, 0.0);
        let mut bank = standing_bank(1.5 * PI);
        let mut legs = init_legs(&body, &bank, &config);
        let start_feet: Vec<[f64; 2]> = legs.iter().map(|l| l.foot_position).collect();
        for _ in 0..5000 {
            let (b, l, grf) = step_plant(&body, &legs, &bank, dt, &config).unwrap();
            for leg in Leg::ALL {
                assert!((grf[leg] - 0.25).abs() < 1e-9, "grf drifted: {grf:?}");
            }
            bank = crate::oscillator::step_oscillator(&bank, &grf, dt).unwrap();
            body = b;
            legs = l;
        }
        assert!(norm(body.com_position) < 1e-6, "com drifted {:?}", body.com_position);
        for (leg, start) in legs.iter().zip(start_feet.iter()) {
            assert!(norm(sub(leg.foot_position, *start)) < 1e-6);
        }
        for phi in bank.phases() {
            assert!((phi - 1.5 * PI).abs() < 1e-9);
        }
    }

    #[test]
    fn locked_trot_alternates_diagonal_pairs() {
        let config = PlantConfig::default();
        let dt = 0.002;
        let params = crate::oscillator::schedule_params(1.0);
        // Ideal trot: RF/LH in phase, LF/RH opposite.
        let mut bank = OscillatorBank::new(
            [1.5 * PI, 0.5 * PI, 0.5 * PI, 1.5 * PI],
            params,
            CouplingMode::Decentralized,
        )
        .unwrap();
        let mut body = BodyState::at_rest(1.0, 0.0);
        let mut legs = init_legs(&body, &bank, &config);
        let steps = (5.0 / dt) as usize;
        let mut grfs = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (b, l, grf) = step_plant(&body, &legs, &bank, dt, &config).unwrap();
            grfs.push(grf.as_array());
            bank = crate::oscillator::step_oscillator(&bank, &grf, dt).unwrap();
            body = b;
            legs = l;
        }
        let tds = crate::gait::detect_touchdowns(&grfs, dt, 0.0, 0.02, 0.04).unwrap();
        // Skip each leg's first event: legs starting mid-stance register a
        // touchdown at t = 0.
        let rf = &tds.touchdowns[Leg::RightFront.index()][1..];
        let lh = &tds.touchdowns[Leg::LeftHind.index()][1..];
        let lf = &tds.touchdowns[Leg::LeftFront.index()][1..];
        assert!(rf.len() >= 8, "expected several cycles, got {}", rf.len());
        // Diagonal partners touch down together; opposite pairs alternate.
        for (a, b) in rf.iter().zip(lh.iter()) {
            assert!((a - b).abs() <= dt + 1e-9, "diagonal pair out of sync");
        }
        // Measured cycle (the loaded oscillator runs slightly below ω).
        let period = (rf.last().unwrap() - rf.first().unwrap()) / (rf.len() - 1) as f64;
        for (a, b) in rf.iter().zip(lf.iter()) {
            let offset = (b - a).rem_euclid(period) / period;
            assert!(
                (offset - 0.5).abs() < 0.05,
                "opposite pairs should be half a cycle apart, got {offset}"
            );
        }
        // GRF alternates between the diagonals, with only brief
        // double-support overlap around each handover.
        let mut exclusive = 0usize;
        let mut a_loaded = 0usize;
        for g in &grfs {
            let diag_a = g[Leg::RightFront.index()] + g[Leg::LeftHind.index()];
            let diag_b = g[Leg::LeftFront.index()] + g[Leg::RightHind.index()];
            if diag_a < 1e-9 || diag_b < 1e-9 {
                exclusive += 1;
            }
            if diag_a > diag_b {
                a_loaded += 1;
            }
        }
        let exclusive_frac = exclusive as f64 / grfs.len() as f64;
        assert!(exclusive_frac > 0.9, "weak alternation: {exclusive_frac}");
        let a_frac = a_loaded as f64 / grfs.len() as f64;
        assert!((a_frac - 0.5).abs() < 0.1, "one diagonal dominates: {a_frac}");
    }

    #[test]
    fn perturbation_examples() {
        let body = BodyState::at_rest(0.0, 0.0);
        assert_eq!(apply_perturbation(&body, [0.0, 0.0]), body);
        let pushed = apply_perturbation(&body, [1.5, 0.0]);
        assert_eq!(pushed.velocity, [1.5, 0.0]);
        assert_eq!(pushed.com_position, body.com_position);
        for k in 0..36 {
            let angle = (k as f64) * 10f64.to_radians();
            let impulse = [2.0 * angle.cos(), 2.0 * angle.sin()];
            let after = apply_perturbation(&body, impulse);
            let dv = norm(sub(after.velocity, body.velocity));
            assert!((dv - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flight_has_zero_grf() {
        let config = PlantConfig::default();
        let body = BodyState::at_rest(0.0, 0.0);
        let bank = standing_bank(0.3);
        let legs = init_legs(&body, &bank, &config);
        let pushed = apply_perturbation(&body, [1.0, 1.0]);
        let (_, _, grf) = step_plant(&pushed, &legs, &bank, 0.002, &config).unwrap();
        assert_eq!(grf, GrfVector::ZERO);
    }

    #[test]
    fn failure_cases() {
        let config = PlantConfig::default();
        let feet_square: [[f64; 2]; 4] = [
            [0.19, -0.1],
            [0.19, 0.1],
            [-0.19, -0.1],
            [-0.19, 0.1],
        ];
        let all_stance = [LegMode::Stance; 4];
        let all_swing = [LegMode::Swing; 4];
        let dt = 0.002;

        // Centered CoM on four feet: fine forever.
        let ok = detect_failure(
            (0..5000).map(|i| (i as f64 * dt, [0.0, 0.0], all_stance, feet_square)),
            &config,
        );
        assert_eq!(ok, FailureOutcome::Ok);

        // No feet at all for longer than the grace period.
        let failed = detect_failure(
            (0..5000).map(|i| (i as f64 * dt, [0.0, 0.0], all_swing, feet_square)),
            &config,
        );
        match failed {
            FailureOutcome::FailedAt(t) => {
                assert!((t - config.failure_grace).abs() < 2.0 * dt, "failed at {t}")
            }
            FailureOutcome::Ok => panic!("expected failure"),
        }

        // Outside for half the grace, then recovered.
        let half = (config.failure_grace / 2.0 / dt) as usize;
        let recovered = detect_failure(
            (0..5000).map(|i| {
                let modes = if i < half { all_swing } else { all_stance };
                (i as f64 * dt, [0.0, 0.0], modes, feet_square)
            }),
            &config,
        );
        assert_eq!(recovered, FailureOutcome::Ok);
    }

    #[test]
    fn support_distance_geometry() {
        let square = [
            [1.0, -1.0],
            [1.0, 1.0],
            [-1.0, -1.0],
            [-1.0, 1.0],
        ];
        assert_eq!(support_distance([0.0, 0.0], &square), 0.0);
        assert!((support_distance([2.0, 0.0], &square) - 1.0).abs() < 1e-12);
        assert!((support_distance([0.0, 0.0], &square[..2]) - 1.0).abs() < 1e-12);
        assert!((support_distance([0.0, 0.5], &square[..1]) - 3.25f64.sqrt()).abs() < 1e-12);
        assert_eq!(support_distance([0.0, 0.0], &[]), f64::INFINITY);
        // Collinear points collapse to a segment.
        let line = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!((support_distance([1.0, 0.3], &line) - 0.3).abs() < 1e-12);
        // CoM exactly on a hull edge counts as supported (distance zero).
        let tri = [[0.19, -0.1], [-0.19, 0.1], [-0.19, -0.1]];
        assert_eq!(support_distance([0.0, 0.0], &tri), 0.0);
    }
}
