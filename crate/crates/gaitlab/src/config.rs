//! Run configuration: a single validated tree covering the oscillator,
//! plant, experiment, reward, output and seeding sections.
//!
//! Configs deserialize with unknown keys rejected, validate before any
//! simulation, and hash to a digest of their canonical JSON form so that
//! whitespace and key order in the source file never affect identity.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harness::{OrcMask, PerturbationScheduleConfig};
use crate::oscillator::CouplingMode;
use crate::plant::PlantConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid config value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// Which experiment protocol to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Balance,
    Emergence,
    Disturbance,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Balance => "balance",
            ExperimentKind::Emergence => "emergence",
            ExperimentKind::Disturbance => "disturbance",
        }
    }
}

/// Oscillator section: integration step, coupling mode, schedule options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatorConfig {
    /// Physics time step, seconds.
    pub dt: f64,
    pub coupling_mode: CouplingMode,
    /// Width of the optional linear blend across the |v_x| = 0.5 parameter
    /// switch, m/s. 0 keeps the exact case expression.
    pub blend_width: f64,
    /// Pin (ω, σ, ξ) instead of using the velocity schedule.
    pub params_override: Option<[f64; 3]>,
    /// Pin initial phases instead of drawing them uniformly per rollout.
    pub init_phases: Option<[f64; 4]>,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        Self {
            dt: 0.002,
            coupling_mode: CouplingMode::Decentralized,
            blend_width: 0.0,
            params_override: None,
            init_phases: None,
        }
    }
}

/// Experiment section. Fields left unset fall back to the per-protocol
/// defaults (balance: 500 × 10 s at 1 m/s; emergence: 500 × 40 s at 1 m/s;
/// disturbance: 50 × 36 staggered trials at 3 m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_rollouts: Option<usize>,
    pub duration_s: Option<f64>,
    pub v_x: Option<f64>,
    pub yaw_rate: f64,
    pub mask: OrcMask,
    /// Evaluation-time feedback gain override. Takes precedence over both
    /// the schedule and the coupling mask.
    pub eval_sigma: Option<f64>,
    /// Settling time before perturbations, seconds (disturbance).
    pub settle_s: f64,
    /// Post-impulse window in which a failure counts, seconds (disturbance).
    pub observe_s: f64,
    /// Impulse magnitudes swept by the disturbance protocol, m/s.
    pub magnitudes: Vec<f64>,
    /// Independent seed families for mean/std reporting (disturbance).
    pub seed_families: usize,
    pub schedule: PerturbationScheduleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Balance,
            n_rollouts: None,
            duration_s: None,
            v_x: None,
            yaw_rate: 0.0,
            mask: OrcMask::ALL_ON,
            eval_sigma: None,
            settle_s: 5.0,
            observe_s: 5.0,
            magnitudes: vec![1.5, 2.0, 2.5, 3.0, 3.5],
            seed_families: 10,
            schedule: PerturbationScheduleConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn effective_n_rollouts(&self) -> usize {
        self.n_rollouts.unwrap_or(500)
    }

    pub fn effective_duration(&self) -> f64 {
        self.duration_s.unwrap_or(match self.kind {
            ExperimentKind::Balance => 10.0,
            ExperimentKind::Emergence => 40.0,
            ExperimentKind::Disturbance => 10.0,
        })
    }

    pub fn effective_v_x(&self) -> f64 {
        self.v_x.unwrap_or(match self.kind {
            ExperimentKind::Disturbance => 3.0,
            _ => 1.0,
        })
    }
}

/// Reward weight and scale tables. Anything not listed defaults to 1.0 at
/// scoring time; entries here override per term.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub weights: BTreeMap<String, f64>,
    pub scales: BTreeMap<String, f64>,
}

/// On-disk log format for rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogFormat {
    #[default]
    Csv,
}

/// Output section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub format: LogFormat,
    /// Keep every n-th physics sample when writing rollout logs
    /// (500 Hz physics / 5 = 100 Hz logs by default). Experiment analyses
    /// always run at the full physics rate.
    pub decimation: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            format: LogFormat::Csv,
            decimation: 5,
        }
    }
}

/// Seed section: rollout i uses `base + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    pub base: u64,
    /// Number of rollouts for `simulate`.
    pub count: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            base: 12345,
            count: 1,
        }
    }
}

/// The full validated run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub oscillator: OscillatorConfig,
    pub plant: PlantConfig,
    pub experiment: ExperimentConfig,
    pub rewards: RewardConfig,
    pub output: OutputConfig,
    pub seed: SeedConfig,
}

impl RunConfig {
    /// SHA-256 of the canonical JSON serialization, as lowercase hex.
    ///
    /// The output directory is normalized away first: two runs that differ
    /// only in where they write are the same run.
    pub fn digest(&self) -> String {
        let mut normalized = self.clone();
        normalized.output.directory = PathBuf::new();
        let canonical = serde_json::to_string(&normalized).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &'static str, reason: String| ConfigError::Invalid { key, reason };
        if !self.oscillator.dt.is_finite() || self.oscillator.dt <= 0.0 {
            return Err(invalid(
                "oscillator.dt",
                format!("must be positive, got {}", self.oscillator.dt),
            ));
        }
        if self.oscillator.blend_width < 0.0 || !self.oscillator.blend_width.is_finite() {
            return Err(invalid(
                "oscillator.blend_width",
                format!("must be >= 0, got {}", self.oscillator.blend_width),
            ));
        }
        if let Some([omega, sigma, xi]) = self.oscillator.params_override {
            crate::oscillator::OscillatorParams::new(omega, sigma, xi)
                .map_err(|e| invalid("oscillator.params_override", e.to_string()))?;
        }
        if let Some(phases) = self.oscillator.init_phases {
            if phases.iter().any(|p| !p.is_finite()) {
                return Err(invalid(
                    "oscillator.init_phases",
                    "phases must be finite".to_string(),
                ));
            }
        }
        self.plant
            .validate()
            .map_err(|e| invalid("plant", e.to_string()))?;
        let exp = &self.experiment;
        if exp.effective_n_rollouts() == 0 {
            return Err(invalid(
                "experiment.n_rollouts",
                "must be at least 1".to_string(),
            ));
        }
        if exp.effective_duration() <= 0.0 {
            return Err(invalid(
                "experiment.duration_s",
                format!("must be positive, got {}", exp.effective_duration()),
            ));
        }
        if !exp.effective_v_x().is_finite() {
            return Err(invalid(
                "experiment.v_x",
                "must be finite".to_string(),
            ));
        }
        if let Some(s) = exp.eval_sigma {
            if !s.is_finite() || s < 0.0 {
                return Err(invalid(
                    "experiment.eval_sigma",
                    format!("must be >= 0, got {s}"),
                ));
            }
        }
        if exp.settle_s < 0.0 || exp.observe_s <= 0.0 {
            return Err(invalid(
                "experiment.settle_s",
                "settle must be >= 0 and observe_s > 0".to_string(),
            ));
        }
        if exp.magnitudes.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(invalid(
                "experiment.magnitudes",
                "magnitudes must be finite and >= 0".to_string(),
            ));
        }
        if exp.kind == ExperimentKind::Disturbance && exp.seed_families == 0 {
            return Err(invalid(
                "experiment.seed_families",
                "must be at least 1".to_string(),
            ));
        }
        exp.schedule
            .validate()
            .map_err(|e| invalid("experiment.schedule", e.to_string()))?;
        if let Some(n) = exp.n_rollouts {
            if exp.kind == ExperimentKind::Disturbance && n != exp.schedule.trials() {
                return Err(invalid(
                    "experiment.n_rollouts",
                    format!(
                        "disturbance trial count {n} does not match schedule ({} groups x {} angles = {})",
                        exp.schedule.groups,
                        exp.schedule.group_size,
                        exp.schedule.trials()
                    ),
                ));
            }
        }
        if self.output.decimation == 0 {
            return Err(invalid(
                "output.decimation",
                "must be at least 1".to_string(),
            ));
        }
        if self.seed.count == 0 {
            return Err(invalid("seed.count", "must be at least 1".to_string()));
        }
        for (name, w) in &self.rewards.weights {
            if !w.is_finite() {
                return Err(invalid(
                    "rewards.weights",
                    format!("weight `{name}` must be finite"),
                ));
            }
        }
        for (name, s) in &self.rewards.scales {
            if !s.is_finite() || *s <= 0.0 {
                return Err(invalid(
                    "rewards.scales",
                    format!("scale `{name}` must be positive"),
                ));
            }
        }
        Ok(())
    }

    /// Seeds used by `simulate`: `base + i` for i in 0..count.
    pub fn simulate_seeds(&self) -> Vec<u64> {
        (0..self.seed.count as u64)
            .map(|i| self.seed.base.wrapping_add(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        let config = RunConfig::default();
        config.validate().unwrap();
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let config = RunConfig::default();
        assert_eq!(config.digest(), config.digest());
        let mut other = config.clone();
        other.seed.base = 99;
        assert_ne!(config.digest(), other.digest());
        assert_eq!(config.digest().len(), 64);
    }

    #[test]
    fn validation_names_offending_key() {
        let mut config = RunConfig::default();
        config.oscillator.dt = -1.0;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("oscillator.dt"), "{err}");

        let mut config = RunConfig::default();
        config.output.decimation = 0;
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("output.decimation"), "{err}");
    }

    #[test]
    fn disturbance_trial_count_must_match_schedule() {
        let mut config = RunConfig::default();
        config.experiment.kind = ExperimentKind::Disturbance;
        config.experiment.n_rollouts = Some(100);
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("n_rollouts"), "{err}");
    }

    #[test]
    fn per_kind_defaults() {
        let mut exp = ExperimentConfig::default();
        assert_eq!(exp.effective_duration(), 10.0);
        assert_eq!(exp.effective_v_x(), 1.0);
        exp.kind = ExperimentKind::Emergence;
        assert_eq!(exp.effective_duration(), 40.0);
        exp.kind = ExperimentKind::Disturbance;
        assert_eq!(exp.effective_v_x(), 3.0);
    }
}
