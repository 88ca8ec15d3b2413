//! Phase-based gait reward and squared-exponential shaping terms, evaluated
//! as pure functions over logged state.
//!
//! The gait reward sums `−F_i sin φ_i` over the legs: it penalizes contact
//! while a leg's phase is in the swing half [0, π) and rewards contact in
//! the stance half [π, 2π). Tracking terms pass errors through
//! `exp(−err²/scale)`; regularizers are negative penalties on surrogate
//! proxy channels (the plant has no joint torques, so torque and smoothness
//! terms operate on the commanded leg forces, i.e. the GRF channel).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RewardConfig;
use crate::harness::RolloutLog;
use crate::oscillator::{GrfVector, OscillatorBank};
use crate::plant::NOMINAL_BASE_HEIGHT;
use crate::{circular_diff, wrap_angle};

/// Tracking terms (squared exponentials in (0, 1]).
pub const TRACKING_TERMS: [&str; 3] = ["command_tracking", "orientation", "base_height"];
/// Regularizer terms (non-positive penalties on proxy channels).
pub const REGULARIZER_TERMS: [&str; 4] =
    ["torque_sq", "action_smooth_1", "action_smooth_2", "hip_deviation"];
/// Remaining named terms.
pub const OTHER_TERMS: [&str; 2] = ["gait", "termination"];

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("reward term `{term}` requires channel `{channel}` which is absent from the log")]
    MissingChannel { term: String, channel: String },
    #[error("unknown reward term `{0}`")]
    UnknownTerm(String),
}

/// Per-step reward evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSample {
    /// Σ_i −grf_i · sin(φ_i), weighted. Exactly 0 when the reward signal
    /// was masked in the source log.
    pub gait_reward: f64,
    /// Squared-exponential tracking terms by name; absent terms were not
    /// requested (never silently zero).
    pub tracking_terms: BTreeMap<String, f64>,
    /// Negative regularizer penalties by name.
    pub regularizers: BTreeMap<String, f64>,
    /// Flat penalty on the failure step, 0 elsewhere.
    pub termination_penalty: f64,
}

impl RewardSample {
    /// Sum of every term in the sample.
    pub fn total(&self) -> f64 {
        self.gait_reward
            + self.tracking_terms.values().sum::<f64>()
            + self.regularizers.values().sum::<f64>()
            + self.termination_penalty
    }
}

/// Gait reward Σ_i −grf_i · sin(φ_i) (unweighted).
pub fn gait_reward(bank: &OscillatorBank, grf: &GrfVector) -> f64 {
    bank.phases()
        .iter()
        .zip(grf.as_array().iter())
        .map(|(phi, f)| -f * phi.sin())
        .sum()
}

/// Squared exponential `exp(−error²/scale)`; equals 1 iff the error is 0.
pub fn squared_exponential(error: f64, scale: f64) -> Result<f64, RewardError> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(RewardError::NonPositiveScale(scale));
    }
    Ok((-error * error / scale).exp())
}

fn weight(config: &RewardConfig, term: &str) -> f64 {
    config.weights.get(term).copied().unwrap_or(1.0)
}

fn scale(config: &RewardConfig, term: &str) -> f64 {
    config.scales.get(term).copied().unwrap_or(1.0)
}

/// Score a rollout log against the configured reward table.
///
/// Terms with weight 0 are skipped (reported as absent). Requesting a term
/// whose channel the log does not carry is an error naming both the term
/// and the channel; the surrogate provides no hip joints, so
/// `hip_deviation` is only scoreable on logs that some day carry that
/// channel.
pub fn score_rollout(
    log: &RolloutLog,
    config: &RewardConfig,
) -> Result<Vec<RewardSample>, RewardError> {
    for term in config.weights.keys() {
        let known = TRACKING_TERMS
            .iter()
            .chain(REGULARIZER_TERMS.iter())
            .chain(OTHER_TERMS.iter())
            .any(|t| t == term);
        if !known {
            return Err(RewardError::UnknownTerm(term.clone()));
        }
    }
    let enabled = |term: &str| weight(config, term) != 0.0;
    if enabled("hip_deviation") && config.weights.contains_key("hip_deviation") {
        // The surrogate log carries no hip joint channel.
        return Err(RewardError::MissingChannel {
            term: "hip_deviation".to_string(),
            channel: "hip_abduction".to_string(),
        });
    }

    let n = log.len();
    let mut out = Vec::with_capacity(n);
    let se_scales = (
        scale(config, "command_tracking"),
        scale(config, "orientation"),
        scale(config, "base_height"),
    );
    let failure_step = log.failure.map(|tf| {
        // The last logged sample at or before the failure time.
        log.time
            .iter()
            .rposition(|&t| t <= tf + 1e-9)
            .unwrap_or(n.saturating_sub(1))
    });

    for i in 0..n {
        let mut tracking = BTreeMap::new();
        if enabled("command_tracking") {
            let cmd = crate::plant::rotate([log.commanded_v_x, 0.0], log.heading[i]);
            let dv = [log.velocity[i][0] - cmd[0], log.velocity[i][1] - cmd[1]];
            let err = (dv[0] * dv[0] + dv[1] * dv[1]).sqrt();
            tracking.insert(
                "command_tracking".to_string(),
                weight(config, "command_tracking") * squared_exponential(err, se_scales.0)?,
            );
        }
        if enabled("orientation") {
            let expected = wrap_angle(log.heading[0] + log.commanded_yaw_rate * log.time[i]);
            let err = circular_diff(log.heading[i], expected);
            tracking.insert(
                "orientation".to_string(),
                weight(config, "orientation") * squared_exponential(err, se_scales.1)?,
            );
        }
        if enabled("base_height") {
            let err = log.base_height[i] - NOMINAL_BASE_HEIGHT;
            tracking.insert(
                "base_height".to_string(),
                weight(config, "base_height") * squared_exponential(err, se_scales.2)?,
            );
        }

        let mut regularizers = BTreeMap::new();
        if enabled("torque_sq") {
            let sq: f64 = log.grfs[i].iter().map(|f| f * f).sum();
            regularizers.insert("torque_sq".to_string(), -weight(config, "torque_sq") * sq);
        }
        if enabled("action_smooth_1") {
            let d1: f64 = if i == 0 {
                0.0
            } else {
                (0..4)
                    .map(|l| {
                        let d = log.grfs[i][l] - log.grfs[i - 1][l];
                        d * d
                    })
                    .sum()
            };
            regularizers.insert(
                "action_smooth_1".to_string(),
                -weight(config, "action_smooth_1") * d1,
            );
        }
        if enabled("action_smooth_2") {
            let d2: f64 = if i < 2 {
                0.0
            } else {
                (0..4)
                    .map(|l| {
                        let d =
                            log.grfs[i][l] - 2.0 * log.grfs[i - 1][l] + log.grfs[i - 2][l];
                        d * d
                    })
                    .sum()
            };
            regularizers.insert(
                "action_smooth_2".to_string(),
                -weight(config, "action_smooth_2") * d2,
            );
        }

        let termination_penalty = if Some(i) == failure_step {
            -weight(config, "termination")
        } else {
            0.0
        };

        // The logged gait channel already reflects the ORC reward mask.
        let gait = if enabled("gait") {
            weight(config, "gait") * log.gait_reward[i]
        } else {
            0.0
        };

        out.push(RewardSample {
            gait_reward: gait,
            tracking_terms: tracking,
            regularizers,
            termination_penalty,
        });
    }
    Ok(out)
}
