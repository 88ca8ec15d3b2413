//! The three experiment protocols — balanced leg use, gait emergence, and
//! disturbance rejection — plus order-independent result merging.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::gait::{
    aggregate_rpd, compute_rpd, detect_contacts_from_modes, AggregatedRpd, GaitLabel,
};
use crate::leg::Leg;
use crate::{circular_diff, wrap_angle};

use super::{
    map_seeds, run_rollout_monitored, run_rollout_with_impulses, FailurePolicy, HarnessError,
    OrcMask, PerturbationScheduleConfig,
};

/// RPD components move less than this (rad) over the final window for a
/// rollout to count as stationary.
pub const STATIONARY_TOLERANCE: f64 = 0.1;
/// Label/aggregation tick spacing, seconds.
pub const AGGREGATE_STRIDE_S: f64 = 5.0;
/// Cycles averaged per aggregation tick.
pub const AGGREGATE_WINDOW_CYCLES: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum MergeError {
    #[error("config digests differ: {a} vs {b}")]
    DigestMismatch { a: String, b: String },
    #[error("masks differ: {a} vs {b}")]
    MaskMismatch { a: String, b: String },
    #[error("duplicate seed {0} across partial results")]
    DuplicateSeed(u64),
    #[error("magnitude tables differ")]
    MagnitudeMismatch,
}

/// Episode-mean ground reaction force per leg for one rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSample {
    pub seed: u64,
    pub mean_grf: [f64; 4],
}

/// Balanced-leg-use experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResult {
    pub config_digest: String,
    pub mask: OrcMask,
    pub duration_s: f64,
    pub v_x: f64,
    /// Per-rollout leg means, seed order. Failed rollouts are excluded.
    pub samples: Vec<BalanceSample>,
    /// Seeds that failed, with failure times; reported separately.
    pub failures: Vec<(u64, f64)>,
}

impl BalanceResult {
    /// Interpolated quantile of one leg's mean-GRF distribution.
    pub fn leg_quantile(&self, leg: Leg, q: f64) -> Option<f64> {
        let mut values: Vec<f64> = self
            .samples
            .iter()
            .map(|s| s.mean_grf[leg.index()])
            .collect();
        if values.is_empty() {
            return None;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = q.clamp(0.0, 1.0) * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        Some(values[lo] * (1.0 - frac) + values[hi] * frac)
    }
}

/// Average F over the episode for each leg separately, across seeded
/// rollouts. Which signals are live comes from the config's ORC mask.
pub fn balance_experiment(config: &RunConfig) -> Result<BalanceResult, HarnessError> {
    let exp = &config.experiment;
    let n = exp.effective_n_rollouts();
    let mask = exp.mask;
    let seeds: Vec<u64> = (0..n as u64).map(|i| config.seed.base.wrapping_add(i)).collect();
    let rollouts = map_seeds(&seeds, |seed| {
        let log = run_rollout_with_impulses(config, mask, seed, 1, &[])?;
        let count = log.len().max(1) as f64;
        let mut mean = [0.0; 4];
        for grf in &log.grfs {
            for (m, f) in mean.iter_mut().zip(grf.iter()) {
                *m += f;
            }
        }
        for m in mean.iter_mut() {
            *m /= count;
        }
        Ok((seed, mean, log.failure))
    })?;

    let mut result = BalanceResult {
        config_digest: config.digest(),
        mask,
        duration_s: exp.effective_duration(),
        v_x: exp.effective_v_x(),
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for (seed, mean, failure) in rollouts {
        match failure {
            Some(t) => result.failures.push((seed, t)),
            None => result.samples.push(BalanceSample {
                seed,
                mean_grf: mean,
            }),
        }
    }
    Ok(result)
}

/// Gait-emergence summary for one rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceRollout {
    pub seed: u64,
    /// RPD implied by the initial oscillator phases: (φ_RF − φ_j) mod 2π.
    pub initial_phase_rpd: [f64; 3],
    /// Aggregated RPD and label at every 5 s tick.
    pub ticks: Vec<AggregatedRpd>,
    /// Aggregated RPD at the last tick.
    pub final_rpd: Option<[f64; 3]>,
    pub final_label: Option<GaitLabel>,
    /// First tick time after which the label never changes.
    pub converged_at: Option<f64>,
    /// Survived to the end with RPD moving less than the tolerance over the
    /// final window.
    pub stationary: bool,
    pub incomplete_cycles: usize,
    pub failure: Option<f64>,
}

/// Gait-emergence experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceResult {
    pub config_digest: String,
    pub mask: OrcMask,
    pub eval_sigma: Option<f64>,
    pub duration_s: f64,
    pub rollouts: Vec<EmergenceRollout>,
}

impl EmergenceResult {
    pub fn stationary_fraction(&self) -> f64 {
        if self.rollouts.is_empty() {
            return 0.0;
        }
        self.rollouts.iter().filter(|r| r.stationary).count() as f64
            / self.rollouts.len() as f64
    }
}

/// Initial/final RPD pairs and label trajectories over seeded rollouts.
///
/// Rollouts here run the full horizon with the failure monitor recording
/// (not terminating): the protocol measures phase dynamics, which stay well
/// defined even for quasi-statically unsupported gaits.
pub fn emergence_experiment(config: &RunConfig) -> Result<EmergenceResult, HarnessError> {
    let exp = &config.experiment;
    let n = exp.effective_n_rollouts();
    let duration = exp.effective_duration();
    let mask = exp.mask;
    let seeds: Vec<u64> = (0..n as u64).map(|i| config.seed.base.wrapping_add(i)).collect();
    let rollouts = map_seeds(&seeds, |seed| {
        let log =
            run_rollout_monitored(config, mask, seed, 1, &[], FailurePolicy::MonitorOnly)?;
        Ok(summarize_emergence(&log, duration))
    })?;
    Ok(EmergenceResult {
        config_digest: config.digest(),
        mask,
        eval_sigma: exp.eval_sigma,
        duration_s: duration,
        rollouts,
    })
}

fn summarize_emergence(log: &super::RolloutLog, duration: f64) -> EmergenceRollout {
    let phases0 = log.phases.first().copied().unwrap_or([0.0; 4]);
    let rf = phases0[Leg::RightFront.index()];
    let initial_phase_rpd = [
        wrap_angle(rf - phases0[Leg::LeftFront.index()]),
        wrap_angle(rf - phases0[Leg::RightHind.index()]),
        wrap_angle(rf - phases0[Leg::LeftHind.index()]),
    ];

    let (ticks, incomplete) = detect_contacts_from_modes(log)
        .and_then(|t| {
            compute_rpd(&t).map(|series| {
                (
                    aggregate_rpd(
                        &series.samples,
                        AGGREGATE_WINDOW_CYCLES,
                        AGGREGATE_STRIDE_S,
                        duration,
                    ),
                    series.incomplete_cycles,
                )
            })
        })
        .unwrap_or_default();

    let final_entry = ticks.last().copied();
    let converged_at = convergence_time(&ticks);
    // Stationarity is a statement about the RPD alone: the last two ticks
    // exist, the last one sits at the horizon, and no component moved more
    // than the tolerance between them.
    let stationary = ticks.len() >= 2 && {
        let last = ticks[ticks.len() - 1];
        let prev = ticks[ticks.len() - 2];
        (last.time - duration).abs() < 1e-6
            && (0..3)
                .all(|i| circular_diff(last.rpd[i], prev.rpd[i]).abs() < STATIONARY_TOLERANCE)
    };

    EmergenceRollout {
        seed: log.seed,
        initial_phase_rpd,
        final_rpd: final_entry.map(|e| e.rpd),
        final_label: final_entry.map(|e| e.label),
        converged_at,
        stationary,
        incomplete_cycles: incomplete,
        failure: log.failure,
        ticks,
    }
}

/// First tick after which the label never changes (None for empty series).
fn convergence_time(ticks: &[AggregatedRpd]) -> Option<f64> {
    let last = ticks.last()?;
    let mut converged = last.time;
    for entry in ticks.iter().rev().skip(1) {
        if entry.label == last.label {
            converged = entry.time;
        } else {
            break;
        }
    }
    Some(converged)
}

/// One impulse-magnitude row of the failure table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeRow {
    pub magnitude: f64,
    /// Post-impulse failures per seed family.
    pub failures_per_family: Vec<usize>,
    /// Failures before the impulse landed (settling), per family; excluded
    /// from the rate.
    pub settle_failures_per_family: Vec<usize>,
    pub trials_per_family: usize,
}

impl MagnitudeRow {
    pub fn rates_percent(&self) -> Vec<f64> {
        self.failures_per_family
            .iter()
            .map(|&f| 100.0 * f as f64 / self.trials_per_family as f64)
            .collect()
    }

    pub fn mean_percent(&self) -> f64 {
        let rates = self.rates_percent();
        rates.iter().sum::<f64>() / rates.len().max(1) as f64
    }

    /// Sample standard deviation across families (0 for a single family).
    pub fn std_percent(&self) -> f64 {
        let rates = self.rates_percent();
        if rates.len() < 2 {
            return 0.0;
        }
        let mean = self.mean_percent();
        let var = rates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
            / (rates.len() - 1) as f64;
        var.sqrt()
    }
}

/// Disturbance-rejection experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceResult {
    pub config_digest: String,
    pub mask: OrcMask,
    pub schedule: PerturbationScheduleConfig,
    pub settle_s: f64,
    pub observe_s: f64,
    pub seed_families: usize,
    pub rows: Vec<MagnitudeRow>,
}

/// Staggered velocity-impulse protocol: every trial gets one impulse at its
/// (group, angle) slot; a trial fails if the plant failure triggers within
/// `observe_s` after its impulse. The same (family, trial) seed is reused
/// across magnitudes so rows differ only by impulse strength.
pub fn disturbance_experiment(config: &RunConfig) -> Result<DisturbanceResult, HarnessError> {
    let exp = &config.experiment;
    let schedule = exp.schedule;
    schedule.validate()?;
    if let Some(n) = exp.n_rollouts {
        if n != schedule.trials() {
            return Err(HarnessError::InvalidSchedule(format!(
                "n_rollouts {n} does not match schedule trials {}",
                schedule.trials()
            )));
        }
    }
    let settle = exp.settle_s;
    let observe = exp.observe_s;
    let families = exp.seed_families;
    let trials = schedule.trials();

    let mut rows = Vec::with_capacity(exp.magnitudes.len());
    for &magnitude in &exp.magnitudes {
        let mut failures_per_family = Vec::with_capacity(families);
        let mut settle_failures_per_family = Vec::with_capacity(families);
        for family in 0..families {
            let family_base = config.seed.base.wrapping_add((family as u64) << 32);
            let seeds: Vec<u64> = (0..trials as u64).map(|t| family_base.wrapping_add(t)).collect();
            let outcomes = map_seeds(&seeds, |seed| {
                let trial = (seed.wrapping_sub(family_base)) as usize;
                let slot = schedule.assignment(trial, settle);
                let mut trial_config = config.clone();
                trial_config.experiment.duration_s = Some(slot.time_s + observe);
                let log = run_rollout_with_impulses(
                    &trial_config,
                    exp.mask,
                    seed,
                    trial_config.oscillator.dt.recip().round() as usize, // sparse log; analysis unused
                    &[(slot.time_s, slot.impulse(magnitude))],
                )?;
                Ok(match log.failure {
                    Some(tf) if tf > slot.time_s && tf <= slot.time_s + observe + 1e-9 => {
                        TrialOutcome::Failed
                    }
                    Some(_) => TrialOutcome::SettleFailure,
                    None => TrialOutcome::Survived,
                })
            })?;
            failures_per_family
                .push(outcomes.iter().filter(|o| **o == TrialOutcome::Failed).count());
            settle_failures_per_family.push(
                outcomes
                    .iter()
                    .filter(|o| **o == TrialOutcome::SettleFailure)
                    .count(),
            );
        }
        rows.push(MagnitudeRow {
            magnitude,
            failures_per_family,
            settle_failures_per_family,
            trials_per_family: trials,
        });
    }

    Ok(DisturbanceResult {
        config_digest: config.digest(),
        mask: exp.mask,
        schedule,
        settle_s: settle,
        observe_s: observe,
        seed_families: families,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrialOutcome {
    Survived,
    Failed,
    SettleFailure,
}

fn check_digests(a: &str, b: &str) -> Result<(), MergeError> {
    if a != b {
        return Err(MergeError::DigestMismatch {
            a: a.to_string(),
            b: b.to_string(),
        });
    }
    Ok(())
}

/// Merge two balance results from the same config over disjoint seeds.
/// Order-independent: samples are re-sorted by seed.
pub fn merge_balance(a: &BalanceResult, b: &BalanceResult) -> Result<BalanceResult, MergeError> {
    check_digests(&a.config_digest, &b.config_digest)?;
    if a.mask != b.mask {
        return Err(MergeError::MaskMismatch {
            a: a.mask.label(),
            b: b.mask.label(),
        });
    }
    let mut merged = a.clone();
    merged.samples.extend(b.samples.iter().copied());
    merged.failures.extend(b.failures.iter().copied());
    merged.samples.sort_by_key(|s| s.seed);
    merged.failures.sort_by_key(|f| f.0);
    let mut seen = std::collections::BTreeSet::new();
    for seed in merged
        .samples
        .iter()
        .map(|s| s.seed)
        .chain(merged.failures.iter().map(|f| f.0))
    {
        if !seen.insert(seed) {
            return Err(MergeError::DuplicateSeed(seed));
        }
    }
    Ok(merged)
}

/// Merge two emergence results from the same config over disjoint seeds.
pub fn merge_emergence(
    a: &EmergenceResult,
    b: &EmergenceResult,
) -> Result<EmergenceResult, MergeError> {
    check_digests(&a.config_digest, &b.config_digest)?;
    if a.mask != b.mask {
        return Err(MergeError::MaskMismatch {
            a: a.mask.label(),
            b: b.mask.label(),
        });
    }
    let mut merged = a.clone();
    merged.rollouts.extend(b.rollouts.iter().cloned());
    merged.rollouts.sort_by_key(|r| r.seed);
    let mut seen = std::collections::BTreeSet::new();
    for r in &merged.rollouts {
        if !seen.insert(r.seed) {
            return Err(MergeError::DuplicateSeed(r.seed));
        }
    }
    Ok(merged)
}

/// Merge two disturbance results from the same config: rows must cover the
/// same magnitudes; family columns concatenate and stats recompute from the
/// raw counts.
pub fn merge_disturbance(
    a: &DisturbanceResult,
    b: &DisturbanceResult,
) -> Result<DisturbanceResult, MergeError> {
    check_digests(&a.config_digest, &b.config_digest)?;
    if a.rows.len() != b.rows.len()
        || a.rows
            .iter()
            .zip(b.rows.iter())
            .any(|(x, y)| x.magnitude != y.magnitude || x.trials_per_family != y.trials_per_family)
    {
        return Err(MergeError::MagnitudeMismatch);
    }
    let mut merged = a.clone();
    merged.seed_families += b.seed_families;
    for (row, other) in merged.rows.iter_mut().zip(b.rows.iter()) {
        row.failures_per_family
            .extend(other.failures_per_family.iter().copied());
        row.settle_failures_per_family
            .extend(other.settle_failures_per_family.iter().copied());
    }
    Ok(merged)
}
