//! Batch rollout harness: seeded deterministic rollouts, ORC signal masks,
//! the staggered perturbation schedule, and the three experiment protocols.
//!
//! Every rollout is a pure function of (config digest, mask, seed): phases
//! are drawn from a per-rollout ChaCha8 stream, the physics loop is fixed
//! order, and batch results are collected in seed order, so re-running any
//! batch reproduces its outputs byte for byte regardless of the `parallel`
//! feature.

mod experiments;
mod output;

pub use experiments::{
    balance_experiment, disturbance_experiment, emergence_experiment, merge_balance,
    merge_disturbance, merge_emergence, BalanceResult, BalanceSample, DisturbanceResult,
    EmergenceResult, EmergenceRollout, MagnitudeRow, MergeError,
};
pub use output::{
    read_manifest, read_rollout_csv, write_balance_csvs, write_disturbance_csv,
    write_emergence_csvs, write_manifest, write_rollout_csv, write_rpd_csv, OutputError,
    RunManifest,
};

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::leg::{Leg, LegMode};
use crate::oscillator::{
    encode_observation, schedule_params_blended, step_oscillator, GrfVector, OscillatorBank,
    OscillatorError, OscillatorParams,
};
use crate::plant::{
    apply_perturbation, init_legs, load_distribution, step_plant, BodyState, FailureDetector,
    PlantError, NOMINAL_BASE_HEIGHT,
};
use crate::rewards::gait_reward;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("invalid perturbation schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid ORC mask `{0}` (expected e.g. ORC110)")]
    InvalidMask(String),
}

/// The (Observations, Rewards, Coupling) ablation mask, named ORCxxx.
///
/// `observations = false` omits the phase observation channel from logs,
/// `rewards = false` zeroes the logged gait-reward channel, and
/// `coupling = false` forces σ = 0 regardless of the parameter schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OrcMask {
    pub observations: bool,
    pub rewards: bool,
    pub coupling: bool,
}

impl OrcMask {
    pub const ALL_ON: OrcMask = OrcMask {
        observations: true,
        rewards: true,
        coupling: true,
    };

    pub fn label(&self) -> String {
        format!(
            "ORC{}{}{}",
            self.observations as u8, self.rewards as u8, self.coupling as u8
        )
    }
}

impl fmt::Display for OrcMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for OrcMask {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let digits = trimmed
            .strip_prefix("ORC")
            .or_else(|| trimmed.strip_prefix("orc"))
            .unwrap_or(trimmed);
        let bits: Vec<bool> = digits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(HarnessError::InvalidMask(s.to_string())),
            })
            .collect::<Result<_, _>>()?;
        if bits.len() != 3 {
            return Err(HarnessError::InvalidMask(s.to_string()));
        }
        Ok(OrcMask {
            observations: bits[0],
            rewards: bits[1],
            coupling: bits[2],
        })
    }
}

impl Serialize for OrcMask {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for OrcMask {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Time-indexed record of one rollout. All channels share the time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutLog {
    pub seed: u64,
    pub mask: OrcMask,
    pub config_digest: String,
    /// Log sample spacing, seconds (physics dt × decimation).
    pub dt: f64,
    pub commanded_v_x: f64,
    pub commanded_yaw_rate: f64,
    pub time: Vec<f64>,
    pub phases: Vec<[f64; 4]>,
    pub grfs: Vec<[f64; 4]>,
    pub modes: Vec<[LegMode; 4]>,
    pub foot_positions: Vec<[[f64; 2]; 4]>,
    pub com: Vec<[f64; 2]>,
    pub heading: Vec<f64>,
    pub velocity: Vec<[f64; 2]>,
    /// Surrogate base height proxy channel (constant).
    pub base_height: Vec<f64>,
    /// Phase observations, present unless masked away.
    pub observations: Option<Vec<[f64; 8]>>,
    /// Logged gait reward channel (zeroed when the reward signal is masked).
    pub gait_reward: Vec<f64>,
    /// Velocity impulse applied within each log interval (mostly zeros).
    pub perturbations: Vec<[f64; 2]>,
    /// Failure time if the rollout ended early.
    pub failure: Option<f64>,
}

impl RolloutLog {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// SHA-256 digest of the serialized log, for determinism checks.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("log serializes");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The staggered velocity-impulse schedule: `groups` waves 0.01 s apart,
/// each hitting `group_size` robots at angles `angle_spacing_deg` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationScheduleConfig {
    pub groups: usize,
    pub group_size: usize,
    pub group_spacing_s: f64,
    pub angle_spacing_deg: f64,
}

impl Default for PerturbationScheduleConfig {
    fn default() -> Self {
        Self {
            groups: 50,
            group_size: 36,
            group_spacing_s: 0.01,
            angle_spacing_deg: 10.0,
        }
    }
}

impl PerturbationScheduleConfig {
    pub fn trials(&self) -> usize {
        self.groups * self.group_size
    }

    /// Length of the window over which impulses are staggered, seconds.
    pub fn window_s(&self) -> f64 {
        self.groups as f64 * self.group_spacing_s
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.groups == 0 || self.group_size == 0 {
            return Err(HarnessError::InvalidSchedule(
                "groups and group_size must be at least 1".to_string(),
            ));
        }
        if !self.group_spacing_s.is_finite() || self.group_spacing_s <= 0.0 {
            return Err(HarnessError::InvalidSchedule(format!(
                "group_spacing_s must be positive, got {}",
                self.group_spacing_s
            )));
        }
        if !self.angle_spacing_deg.is_finite() || self.angle_spacing_deg <= 0.0 {
            return Err(HarnessError::InvalidSchedule(format!(
                "angle_spacing_deg must be positive, got {}",
                self.angle_spacing_deg
            )));
        }
        let coverage = self.group_size as f64 * self.angle_spacing_deg;
        if (coverage - 360.0).abs() > 1e-9 {
            return Err(HarnessError::InvalidSchedule(format!(
                "group_size x angle_spacing must cover 360 degrees, got {coverage}"
            )));
        }
        Ok(())
    }

    /// Row-major trial → (group, angle index) assignment; the impulse lands
    /// at `settle + group × spacing` in direction `angle_index × spacing`.
    pub fn assignment(&self, trial: usize, settle_s: f64) -> TrialAssignment {
        let group = trial / self.group_size;
        let angle_index = trial % self.group_size;
        TrialAssignment {
            trial,
            group,
            angle_index,
            time_s: settle_s + group as f64 * self.group_spacing_s,
            angle_deg: angle_index as f64 * self.angle_spacing_deg,
        }
    }

    pub fn assignments(&self, settle_s: f64) -> Vec<TrialAssignment> {
        (0..self.trials())
            .map(|t| self.assignment(t, settle_s))
            .collect()
    }
}

/// One trial's slot in the staggered schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialAssignment {
    pub trial: usize,
    pub group: usize,
    pub angle_index: usize,
    pub time_s: f64,
    pub angle_deg: f64,
}

impl TrialAssignment {
    pub fn impulse(&self, magnitude: f64) -> [f64; 2] {
        let theta = self.angle_deg.to_radians();
        [magnitude * theta.cos(), magnitude * theta.sin()]
    }
}

/// The feedback gain actually used by a rollout: an explicit evaluation
/// override wins, otherwise the mask decides between the scheduled σ and 0.
pub fn effective_params(config: &RunConfig, mask: OrcMask, v_x: f64) -> OscillatorParams {
    let base = match config.oscillator.params_override {
        Some([omega, sigma, xi]) => OscillatorParams { omega, sigma, xi },
        None => schedule_params_blended(v_x, config.oscillator.blend_width),
    };
    let sigma = match config.experiment.eval_sigma {
        Some(s) => s,
        None if mask.coupling => base.sigma,
        None => 0.0,
    };
    base.with_sigma(sigma)
}

/// What to do when the failure monitor triggers mid-rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailurePolicy {
    /// End the log at the failure time (episode termination).
    StopEarly,
    /// Record the first failure time but keep integrating. Used by the
    /// emergence protocol, whose phase-dynamics measurements need the full
    /// horizon even for quasi-statically unsupported gaits.
    MonitorOnly,
}

/// Run one rollout of `config.experiment.duration` seconds.
///
/// Identical (config, mask, seed) triples produce bit-identical logs. The
/// log is decimated by `decimation` relative to the physics grid; plant
/// failure ends the log early with the failure time recorded.
pub fn run_rollout(config: &RunConfig, mask: OrcMask, seed: u64) -> Result<RolloutLog, HarnessError> {
    run_rollout_decimated(config, mask, seed, config.output.decimation)
}

/// [`run_rollout`] with an explicit log decimation (experiment analyses run
/// at the full physics rate).
pub fn run_rollout_decimated(
    config: &RunConfig,
    mask: OrcMask,
    seed: u64,
    decimation: usize,
) -> Result<RolloutLog, HarnessError> {
    run_rollout_with_impulses(config, mask, seed, decimation, &[])
}

/// [`run_rollout`] with scheduled velocity impulses.
pub fn run_rollout_with_impulses(
    config: &RunConfig,
    mask: OrcMask,
    seed: u64,
    decimation: usize,
    impulses: &[(f64, [f64; 2])],
) -> Result<RolloutLog, HarnessError> {
    run_rollout_monitored(config, mask, seed, decimation, impulses, FailurePolicy::StopEarly)
}

/// Full rollout driver: scheduled impulses plus an explicit failure policy.
pub fn run_rollout_monitored(
    config: &RunConfig,
    mask: OrcMask,
    seed: u64,
    decimation: usize,
    impulses: &[(f64, [f64; 2])],
    failure_policy: FailurePolicy,
) -> Result<RolloutLog, HarnessError> {
    let dt = config.oscillator.dt;
    let duration = config.experiment.effective_duration();
    let v_x = config.experiment.effective_v_x();
    let yaw = config.experiment.yaw_rate;
    let decimation = decimation.max(1);
    let params = effective_params(config, mask, v_x);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases = match config.oscillator.init_phases {
        Some(p) => p,
        None => [(); 4].map(|_| rng.random_range(0.0..TAU)),
    };
    let mut bank = OscillatorBank::new(phases, params, config.oscillator.coupling_mode)?;
    let mut body = BodyState::at_rest(v_x, yaw);
    let mut legs = init_legs(&body, &bank, &config.plant);
    let mut grf = load_distribution(&body, &legs, &config.plant);
    let noise_std = config.plant.grf_noise_std;
    if noise_std > 0.0 {
        grf = perturb_grf(grf, noise_std, &mut rng);
    }

    let n_steps = (duration / dt).round() as usize;
    let n_logged = n_steps.div_ceil(decimation);
    let mut log = RolloutLog {
        seed,
        mask,
        config_digest: config.digest(),
        dt: dt * decimation as f64,
        commanded_v_x: v_x,
        commanded_yaw_rate: yaw,
        time: Vec::with_capacity(n_logged),
        phases: Vec::with_capacity(n_logged),
        grfs: Vec::with_capacity(n_logged),
        modes: Vec::with_capacity(n_logged),
        foot_positions: Vec::with_capacity(n_logged),
        com: Vec::with_capacity(n_logged),
        heading: Vec::with_capacity(n_logged),
        velocity: Vec::with_capacity(n_logged),
        base_height: Vec::with_capacity(n_logged),
        observations: mask.observations.then(|| Vec::with_capacity(n_logged)),
        gait_reward: Vec::with_capacity(n_logged),
        perturbations: Vec::with_capacity(n_logged),
        failure: None,
    };

    let mut detector = FailureDetector::new(&config.plant);
    let mut impulse_cursor = 0usize;
    let mut pending_impulse = [0.0, 0.0];

    for step in 0..n_steps {
        let t = step as f64 * dt;

        // Scheduled impulses whose time has come land before this sample.
        while impulse_cursor < impulses.len() && impulses[impulse_cursor].0 <= t + dt * 0.5 {
            let (_, dv) = impulses[impulse_cursor];
            body = apply_perturbation(&body, dv);
            pending_impulse = [pending_impulse[0] + dv[0], pending_impulse[1] + dv[1]];
            impulse_cursor += 1;
        }

        if step % decimation == 0 {
            log.time.push(t);
            log.phases.push(bank.phases());
            log.grfs.push(grf.as_array());
            log.modes.push(Leg::ALL.map(|l| legs[l.index()].mode));
            log.foot_positions
                .push(Leg::ALL.map(|l| legs[l.index()].foot_position));
            log.com.push(body.com_position);
            log.heading.push(body.heading);
            log.velocity.push(body.velocity);
            log.base_height.push(NOMINAL_BASE_HEIGHT);
            if let Some(obs) = log.observations.as_mut() {
                obs.push(encode_observation(&bank).as_array());
            }
            log.gait_reward.push(if mask.rewards {
                gait_reward(&bank, &grf)
            } else {
                0.0
            });
            log.perturbations.push(pending_impulse);
            pending_impulse = [0.0, 0.0];
        }

        // Failure check on the physics grid.
        let stance: Vec<[f64; 2]> = legs
            .iter()
            .filter(|l| l.mode == LegMode::Stance)
            .map(|l| l.foot_position)
            .collect();
        if let Some(tf) = detector.observe(t, body.com_position, &stance) {
            if log.failure.is_none() {
                log.failure = Some(tf);
            }
            if failure_policy == FailurePolicy::StopEarly {
                break;
            }
        }

        bank = step_oscillator(&bank, &grf, dt)?;
        let (new_body, new_legs, new_grf) = step_plant(&body, &legs, &bank, dt, &config.plant)?;
        body = new_body;
        legs = new_legs;
        grf = if noise_std > 0.0 {
            perturb_grf(new_grf, noise_std, &mut rng)
        } else {
            new_grf
        };
    }

    Ok(log)
}

fn perturb_grf<R: Rng>(grf: GrfVector, std: f64, rng: &mut R) -> GrfVector {
    let mut values = grf.as_array();
    for v in values.iter_mut() {
        // Box-Muller draw; two uniforms per sample keeps the stream simple.
        let u1: f64 = rng.random_range(f64::EPSILON..1.0);
        let u2: f64 = rng.random_range(0.0..TAU);
        let n = (-2.0 * u1.ln()).sqrt() * u2.cos();
        *v = (*v + std * n).clamp(0.0, 1.0);
    }
    GrfVector::new(values).expect("clamped grf in range")
}

/// Sequential batch driver: one log per seed, in seed order.
pub fn run_rollouts_seq(
    config: &RunConfig,
    mask: OrcMask,
    seeds: &[u64],
) -> Result<Vec<RolloutLog>, HarnessError> {
    seeds
        .iter()
        .map(|&s| run_rollout(config, mask, s))
        .collect()
}

/// Data-parallel batch driver; output order matches the seed order, so the
/// result is identical to [`run_rollouts_seq`].
#[cfg(feature = "parallel")]
pub fn run_rollouts_par(
    config: &RunConfig,
    mask: OrcMask,
    seeds: &[u64],
) -> Result<Vec<RolloutLog>, HarnessError> {
    use rayon::prelude::*;
    seeds
        .par_iter()
        .map(|&s| run_rollout(config, mask, s))
        .collect()
}

/// Batch driver honoring the `parallel` feature.
pub fn run_rollouts(
    config: &RunConfig,
    mask: OrcMask,
    seeds: &[u64],
) -> Result<Vec<RolloutLog>, HarnessError> {
    #[cfg(feature = "parallel")]
    {
        run_rollouts_par(config, mask, seeds)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_rollouts_seq(config, mask, seeds)
    }
}

/// Map seeds to per-rollout summaries, in parallel when enabled. The output
/// order always matches the seed order.
pub(crate) fn map_seeds<R, F>(seeds: &[u64], f: F) -> Result<Vec<R>, HarnessError>
where
    R: Send,
    F: Fn(u64) -> Result<R, HarnessError> + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|&s| f(s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|&s| f(s)).collect()
    }
}
