//! On-disk formats: rollout log CSV (with `#`-prefixed metadata preamble),
//! experiment summary CSVs, and the JSON run manifest.
//!
//! Numeric channels serialize with Rust's shortest round-trip float
//! formatting, so reading a log back reproduces the exact values; summary
//! CSVs use fixed six-decimal formatting. All output is locale-independent.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::gait::GaitLabel;
use crate::leg::{Leg, LegMode};

use super::{BalanceResult, DisturbanceResult, EmergenceResult, OrcMask, RolloutLog};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reproducibility manifest written next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_digest: String,
    pub mask: OrcMask,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, mask: OrcMask, seeds: Vec<u64>) -> Self {
        Self {
            tool: "gaitlab".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_digest: config.digest(),
            mask,
            seeds,
            outputs: Vec::new(),
            config: config.clone(),
        }
    }
}

/// Write the manifest as pretty JSON; returns the path written.
pub fn write_manifest(manifest: &RunManifest, dir: &Path) -> Result<PathBuf, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, json.as_bytes()).map_err(io_err(&path))?;
    Ok(path)
}

/// Read a manifest back.
pub fn read_manifest(path: &Path) -> Result<RunManifest, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| OutputError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

const LOG_COLUMNS: &str = "time_s,phase_rf,phase_lf,phase_rh,phase_lh,\
grf_rf,grf_lf,grf_rh,grf_lh,mode_rf,mode_lf,mode_rh,mode_lh,\
foot_rf_x,foot_rf_y,foot_lf_x,foot_lf_y,foot_rh_x,foot_rh_y,foot_lh_x,foot_lh_y,\
com_x,com_y,heading,vel_x,vel_y,base_height,perturb_x,perturb_y,reward_gait";

const OBS_COLUMNS: &str = "obs_sin_rf,obs_cos_rf,obs_sin_lf,obs_cos_lf,\
obs_sin_rh,obs_cos_rh,obs_sin_lh,obs_cos_lh";

/// Write one rollout log as CSV with a `#` metadata preamble.
pub fn write_rollout_csv(log: &RolloutLog, path: &Path) -> Result<(), OutputError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut text = String::new();
    let _ = writeln!(text, "# gaitlab rollout log v1");
    let _ = writeln!(text, "# seed={}", log.seed);
    let _ = writeln!(text, "# mask={}", log.mask);
    let _ = writeln!(text, "# config_digest={}", log.config_digest);
    let _ = writeln!(text, "# dt={}", log.dt);
    let _ = writeln!(text, "# commanded_v_x={}", log.commanded_v_x);
    let _ = writeln!(text, "# commanded_yaw_rate={}", log.commanded_yaw_rate);
    if let Some(tf) = log.failure {
        let _ = writeln!(text, "# failure={tf}");
    }
    let _ = writeln!(
        text,
        "{}{}",
        LOG_COLUMNS,
        if log.observations.is_some() {
            format!(",{OBS_COLUMNS}")
        } else {
            String::new()
        }
    );
    for i in 0..log.len() {
        let _ = write!(text, "{}", log.time[i]);
        for v in log.phases[i] {
            let _ = write!(text, ",{v}");
        }
        for v in log.grfs[i] {
            let _ = write!(text, ",{v}");
        }
        for m in log.modes[i] {
            let _ = write!(text, ",{}", (m == LegMode::Stance) as u8);
        }
        for foot in log.foot_positions[i] {
            let _ = write!(text, ",{},{}", foot[0], foot[1]);
        }
        let _ = write!(
            text,
            ",{},{},{},{},{},{}",
            log.com[i][0],
            log.com[i][1],
            log.heading[i],
            log.velocity[i][0],
            log.velocity[i][1],
            log.base_height[i]
        );
        let _ = write!(
            text,
            ",{},{},{}",
            log.perturbations[i][0], log.perturbations[i][1], log.gait_reward[i]
        );
        if let Some(obs) = &log.observations {
            for v in obs[i] {
                let _ = write!(text, ",{v}");
            }
        }
        let _ = writeln!(text);
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(text.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Read a rollout log CSV back into memory. Malformed rows are reported
/// with their line number.
pub fn read_rollout_csv(path: &Path) -> Result<RolloutLog, OutputError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let parse_err = |line: usize, message: String| OutputError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut log = RolloutLog {
        seed: 0,
        mask: OrcMask::ALL_ON,
        config_digest: String::new(),
        dt: 0.0,
        commanded_v_x: 0.0,
        commanded_yaw_rate: 0.0,
        time: Vec::new(),
        phases: Vec::new(),
        grfs: Vec::new(),
        modes: Vec::new(),
        foot_positions: Vec::new(),
        com: Vec::new(),
        heading: Vec::new(),
        velocity: Vec::new(),
        base_height: Vec::new(),
        observations: None,
        gait_reward: Vec::new(),
        perturbations: Vec::new(),
        failure: None,
    };
    let mut saw_header = false;
    let mut has_obs = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some((key, value)) = meta.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "seed" => {
                        log.seed = value
                            .parse()
                            .map_err(|e| parse_err(line_no, format!("bad seed: {e}")))?
                    }
                    "mask" => {
                        log.mask = value
                            .parse()
                            .map_err(|e| parse_err(line_no, format!("{e}")))?
                    }
                    "config_digest" => log.config_digest = value.to_string(),
                    "dt" => {
                        log.dt = value
                            .parse()
                            .map_err(|e| parse_err(line_no, format!("bad dt: {e}")))?
                    }
                    "commanded_v_x" => {
                        log.commanded_v_x = value
                            .parse()
                            .map_err(|e| parse_err(line_no, format!("bad v_x: {e}")))?
                    }
                    "commanded_yaw_rate" => {
                        log.commanded_yaw_rate = value
                            .parse()
                            .map_err(|e| parse_err(line_no, format!("bad yaw: {e}")))?
                    }
                    "failure" => {
                        log.failure = Some(
                            value
                                .parse()
                                .map_err(|e| parse_err(line_no, format!("bad failure: {e}")))?,
                        )
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            saw_header = true;
            has_obs = line.contains("obs_sin_rf");
            if has_obs {
                log.observations = Some(Vec::new());
            }
            if !line.starts_with("time_s") {
                return Err(parse_err(line_no, "expected header row".to_string()));
            }
            continue;
        }
        let expected = 30 + if has_obs { 8 } else { 0 };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(parse_err(
                line_no,
                format!("expected {expected} columns, found {}", fields.len()),
            ));
        }
        let num = |j: usize| -> Result<f64, OutputError> {
            fields[j]
                .parse::<f64>()
                .map_err(|e| parse_err(line_no, format!("column {}: {e}", j + 1)))
        };
        log.time.push(num(0)?);
        log.phases.push([num(1)?, num(2)?, num(3)?, num(4)?]);
        log.grfs.push([num(5)?, num(6)?, num(7)?, num(8)?]);
        let mut modes = [LegMode::Swing; 4];
        for (k, mode) in modes.iter_mut().enumerate() {
            *mode = match fields[9 + k] {
                "0" => LegMode::Swing,
                "1" => LegMode::Stance,
                other => {
                    return Err(parse_err(line_no, format!("bad mode `{other}`")));
                }
            };
        }
        log.modes.push(modes);
        let mut feet = [[0.0; 2]; 4];
        for (k, foot) in feet.iter_mut().enumerate() {
            *foot = [num(13 + 2 * k)?, num(14 + 2 * k)?];
        }
        log.foot_positions.push(feet);
        log.com.push([num(21)?, num(22)?]);
        log.heading.push(num(23)?);
        log.velocity.push([num(24)?, num(25)?]);
        log.base_height.push(num(26)?);
        log.perturbations.push([num(27)?, num(28)?]);
        log.gait_reward.push(num(29)?);
        if has_obs {
            let mut obs = [0.0; 8];
            for (k, o) in obs.iter_mut().enumerate() {
                *o = num(30 + k)?;
            }
            log.observations.as_mut().unwrap().push(obs);
        }
    }
    if !saw_header {
        return Err(parse_err(1, "missing header row".to_string()));
    }
    Ok(log)
}

/// Write `fig4_balance.csv` (raw per-rollout leg means) and
/// `fig4_balance_summary.csv` (per-leg quantiles). Returns the paths.
pub fn write_balance_csvs(
    result: &BalanceResult,
    dir: &Path,
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let raw_path = dir.join("fig4_balance.csv");
    let mut text = String::from("rollout,seed,leg,mean_grf\n");
    for (i, sample) in result.samples.iter().enumerate() {
        for leg in Leg::ALL {
            let _ = writeln!(
                text,
                "{i},{},{},{:.6}",
                sample.seed,
                leg.label(),
                sample.mean_grf[leg.index()]
            );
        }
    }
    fs::write(&raw_path, text.as_bytes()).map_err(io_err(&raw_path))?;

    let summary_path = dir.join("fig4_balance_summary.csv");
    let mut text = String::from("leg,q05,q25,median,q75,q95,failures\n");
    for leg in Leg::ALL {
        let q = |p: f64| result.leg_quantile(leg, p).unwrap_or(f64::NAN);
        let _ = writeln!(
            text,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            leg.label(),
            q(0.05),
            q(0.25),
            q(0.5),
            q(0.75),
            q(0.95),
            result.failures.len()
        );
    }
    fs::write(&summary_path, text.as_bytes()).map_err(io_err(&summary_path))?;
    Ok(vec![raw_path, summary_path])
}

/// Write `fig5_rpd.csv` (per-rollout initial/final RPD pairs) and
/// `fig6_labels.csv` (label counts over time). Returns the paths.
pub fn write_emergence_csvs(
    result: &EmergenceResult,
    dir: &Path,
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rpd_path = dir.join("fig5_rpd.csv");
    let mut text = String::from(
        "rollout,seed,init_lf,init_rh,init_lh,final_lf,final_rh,final_lh,\
final_label,converged_at_s,stationary,incomplete_cycles,failure_s\n",
    );
    for (i, r) in result.rollouts.iter().enumerate() {
        let final_rpd = r.final_rpd.unwrap_or([f64::NAN; 3]);
        let _ = writeln!(
            text,
            "{i},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{}",
            r.seed,
            r.initial_phase_rpd[0],
            r.initial_phase_rpd[1],
            r.initial_phase_rpd[2],
            final_rpd[0],
            final_rpd[1],
            final_rpd[2],
            r.final_label.map(|l| l.label()).unwrap_or("none"),
            r.converged_at
                .map(|t| format!("{t:.1}"))
                .unwrap_or_default(),
            r.stationary as u8,
            r.incomplete_cycles,
            r.failure.map(|t| format!("{t:.3}")).unwrap_or_default(),
        );
    }
    fs::write(&rpd_path, text.as_bytes()).map_err(io_err(&rpd_path))?;

    let labels_path = dir.join("fig6_labels.csv");
    let mut ticks: Vec<f64> = Vec::new();
    let mut tick = super::experiments::AGGREGATE_STRIDE_S;
    while tick <= result.duration_s + 1e-9 {
        ticks.push(tick);
        tick += super::experiments::AGGREGATE_STRIDE_S;
    }
    let mut text = String::from("time_s,trot,pace,bound,pronk,transition,none\n");
    for t in ticks {
        let mut counts = [0usize; 5];
        let mut none = 0usize;
        for r in &result.rollouts {
            match r.ticks.iter().find(|e| (e.time - t).abs() < 1e-6) {
                Some(entry) => {
                    let slot = GaitLabel::ALL
                        .iter()
                        .position(|l| *l == entry.label)
                        .unwrap();
                    counts[slot] += 1;
                }
                None => none += 1,
            }
        }
        let _ = writeln!(
            text,
            "{t:.1},{},{},{},{},{},{none}",
            counts[0], counts[1], counts[2], counts[3], counts[4]
        );
    }
    fs::write(&labels_path, text.as_bytes()).map_err(io_err(&labels_path))?;
    Ok(vec![rpd_path, labels_path])
}

/// Write `table1_failures.csv`: one row per impulse magnitude with
/// mean ± std failure rates across seed families. Returns the path.
pub fn write_disturbance_csv(
    result: &DisturbanceResult,
    dir: &Path,
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("table1_failures.csv");
    let mut text = String::from(
        "magnitude,mask,mean_failure_pct,std_failure_pct,families,trials_per_family,settle_failures\n",
    );
    for row in &result.rows {
        let settle: usize = row.settle_failures_per_family.iter().sum();
        let _ = writeln!(
            text,
            "{:.1},{},{:.6},{:.6},{},{},{}",
            row.magnitude,
            result.mask,
            row.mean_percent(),
            row.std_percent(),
            row.failures_per_family.len(),
            row.trials_per_family,
            settle
        );
    }
    fs::write(&path, text.as_bytes()).map_err(io_err(&path))?;
    Ok(vec![path])
}

/// Write the classification CSV schema: `time_s,rpd_lf,rpd_rh,rpd_lh,label`.
pub fn write_rpd_csv(
    rows: &[(f64, [f64; 3], GaitLabel)],
    path: &Path,
) -> Result<(), OutputError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut text = String::from("time_s,rpd_lf,rpd_rh,rpd_lh,label\n");
    for (t, rpd, label) in rows {
        let _ = writeln!(
            text,
            "{t:.6},{:.6},{:.6},{:.6},{label}",
            rpd[0], rpd[1], rpd[2]
        );
    }
    fs::write(path, text.as_bytes()).map_err(io_err(path))
}
