//! `gaitlab` command line: simulation, experiment protocols, gait
//! classification, and fixed-point tables, driven by a TOML config file
//! with reproducible seeding.

mod overrides;
mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaitlab::config::{ExperimentKind, RunConfig};
use gaitlab::gait::{
    aggregate_rpd, classify_gait, compute_rpd, detect_touchdowns_from_log, GaitError, RpdSeries,
    TouchdownLog, DEFAULT_DEBOUNCE_S, DEFAULT_TOUCHDOWN_THRESHOLD,
};
use gaitlab::harness::{
    balance_experiment, disturbance_experiment, emergence_experiment, read_rollout_csv,
    run_rollouts, write_balance_csvs, write_disturbance_csv, write_emergence_csvs,
    write_manifest, write_rollout_csv, write_rpd_csv, RunManifest,
};
use gaitlab::leg::Leg;
use gaitlab::oscillator::{find_fixed_points, OscillatorParams, Stability};

/// Exit code for configuration and validation errors.
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "gaitlab", version, about = "Decentralized phase-oscillator quadruped simulation and gait analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the base seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any config key, e.g. `--override experiment.v_x=2.0`.
    /// Repeatable; values parse as TOML literals.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded rollouts and write per-rollout logs plus a manifest.
    Simulate(ConfigArgs),
    /// Solve for the oscillator fixed points under a constant load.
    FixedPoints {
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        xi: f64,
        /// Normalized ground reaction force in [0, 1].
        #[arg(long)]
        grf: f64,
    },
    /// Classify gait from a rollout log CSV or a touchdown CSV
    /// (columns `leg,time_s`).
    Classify {
        /// Input file.
        input: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// GRF contact threshold for rollout logs.
        #[arg(long, default_value_t = DEFAULT_TOUCHDOWN_THRESHOLD)]
        threshold: f64,
        /// Contact debounce window, seconds.
        #[arg(long, default_value_t = DEFAULT_DEBOUNCE_S)]
        debounce: f64,
        /// Emit the windowed 5 s aggregate series instead of per-cycle rows.
        #[arg(long)]
        aggregate: bool,
    },
    /// Run the experiment protocol named in the config and write summary
    /// CSVs plus a manifest.
    Experiment(ConfigArgs),
    /// Render a static SVG plot from an experiment summary CSV.
    Plot {
        /// Summary CSV produced by `experiment`.
        input: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
        /// Plot kind: balance | rpd | labels.
        #[arg(long)]
        kind: plot::PlotKind,
    },
}

enum CliError {
    /// Invalid configuration or arguments: exit code 2.
    Config(String),
    /// Everything else: exit code 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Cap the worker pool via GAITLAB_THREADS (no-op without `parallel`).
fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Ok(value) = std::env::var("GAITLAB_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::FixedPoints {
            omega,
            sigma,
            xi,
            grf,
        } => cmd_fixed_points(omega, sigma, xi, grf),
        Command::Classify {
            input,
            out,
            threshold,
            debounce,
            aggregate,
        } => cmd_classify(&input, out.as_deref(), threshold, debounce, aggregate),
        Command::Experiment(args) => cmd_experiment(&args),
        Command::Plot { input, out, kind } => {
            plot::render(&input, &out, kind).map_err(CliError::Runtime)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

/// Load, patch, validate and return the run config.
fn load_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    for spec in &args.overrides {
        overrides::apply(&mut value, spec).map_err(CliError::Config)?;
    }
    let mut config: RunConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    if let Some(seed) = args.seed {
        config.seed.base = seed;
    }
    if let Some(out) = &args.out {
        config.output.directory = out.clone();
    }
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn cmd_simulate(args: &ConfigArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let seeds = config.simulate_seeds();
    let mask = config.experiment.mask;
    let logs = run_rollouts(&config, mask, &seeds)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
    let dir = config.output.directory.clone();
    let mut manifest = RunManifest::new("simulate", &config, mask, seeds);
    for log in &logs {
        let path = dir.join(format!("rollout_{}.csv", log.seed));
        write_rollout_csv(log, &path).map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
        manifest.outputs.push(format!("rollout_{}.csv", log.seed));
    }
    let manifest_path =
        write_manifest(&manifest, &dir).map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
    println!("config digest: {}", config.digest());
    println!(
        "wrote {} rollout log(s) and {}",
        logs.len(),
        manifest_path.display()
    );
    Ok(())
}

fn cmd_fixed_points(omega: f64, sigma: f64, xi: f64, grf: f64) -> Result<(), CliError> {
    let params = OscillatorParams::new(omega, sigma, xi)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if !(0.0..=1.0).contains(&grf) || !grf.is_finite() {
        return Err(CliError::Config(format!(
            "grf must be in [0, 1], got {grf}"
        )));
    }
    let points = find_fixed_points(&params, grf);
    if points.is_empty() {
        println!("no fixed points");
        return Ok(());
    }
    println!("{:>12}  {:>10}  stability", "phase_rad", "phase_deg");
    for fp in points {
        let stability = match fp.stability {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        };
        println!(
            "{:>12.6}  {:>10.4}  {}",
            fp.phase,
            fp.phase.to_degrees(),
            stability
        );
    }
    Ok(())
}

/// Parse a touchdown CSV with columns `leg,time_s`.
fn read_touchdown_csv(path: &Path) -> Result<TouchdownLog, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", path.display())))?;
    let mut touchdowns: [Vec<f64>; 4] = Default::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if idx == 0 && line.to_ascii_lowercase().starts_with("leg") {
            continue;
        }
        let mut fields = line.split(',');
        let (leg_field, time_field) = (fields.next(), fields.next());
        let err = |msg: String| {
            CliError::Runtime(anyhow::anyhow!("{}:{line_no}: {msg}", path.display()))
        };
        let leg = leg_field
            .and_then(Leg::from_label)
            .ok_or_else(|| err(format!("unknown leg `{}`", leg_field.unwrap_or(""))))?;
        let time: f64 = time_field
            .ok_or_else(|| err("missing time_s column".to_string()))?
            .trim()
            .parse()
            .map_err(|e| err(format!("bad time_s: {e}")))?;
        touchdowns[leg.index()].push(time);
    }
    for times in touchdowns.iter_mut() {
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    TouchdownLog::from_touchdowns(touchdowns)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("{}: {e}", path.display())))
}

fn is_rollout_log(path: &Path) -> bool {
    std::fs::read_to_string(path)
        .map(|text| {
            text.lines()
                .find(|l| !l.trim().is_empty())
                .map(|l| l.starts_with("# gaitlab rollout log") || l.starts_with("time_s"))
                .unwrap_or(false)
        })
        .unwrap_or(false)
}

fn cmd_classify(
    input: &Path,
    out: Option<&Path>,
    threshold: f64,
    debounce: f64,
    aggregate: bool,
) -> Result<(), CliError> {
    let (touchdowns, horizon) = if is_rollout_log(input) {
        let log = read_rollout_csv(input).map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
        let horizon = log.time.last().copied().unwrap_or(0.0);
        let tds = if (threshold - DEFAULT_TOUCHDOWN_THRESHOLD).abs() > 1e-12
            || (debounce - DEFAULT_DEBOUNCE_S).abs() > 1e-12
        {
            gaitlab::gait::detect_touchdowns(
                &log.grfs,
                log.dt,
                log.time.first().copied().unwrap_or(0.0),
                threshold,
                debounce,
            )
        } else {
            detect_touchdowns_from_log(&log)
        }
        .map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
        (tds, horizon)
    } else {
        let tds = read_touchdown_csv(input)?;
        let horizon = tds
            .touchdowns
            .iter()
            .filter_map(|v| v.last())
            .fold(0.0f64, |a, &b| a.max(b));
        (tds, horizon)
    };

    let series: RpdSeries = match compute_rpd(&touchdowns) {
        Ok(series) => series,
        Err(e @ GaitError::InsufficientReferenceTouchdowns { .. }) => {
            // Not an error for the CLI: emit an empty table with the reason.
            emit_rpd_rows(&[], out)?;
            eprintln!("no gait cycles: {e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Runtime(anyhow::anyhow!(e))),
    };

    let rows: Vec<(f64, [f64; 3], gaitlab::gait::GaitLabel)> = if aggregate {
        aggregate_rpd(&series.samples, 2, 5.0, horizon)
            .into_iter()
            .map(|e| (e.time, e.rpd, e.label))
            .collect()
    } else {
        series
            .samples
            .iter()
            .map(|s| (s.cycle_start, s.values, classify_gait(s)))
            .collect()
    };
    emit_rpd_rows(&rows, out)?;
    if series.incomplete_cycles > 0 {
        eprintln!("note: {} incomplete cycle(s) excluded", series.incomplete_cycles);
    }
    Ok(())
}

fn emit_rpd_rows(
    rows: &[(f64, [f64; 3], gaitlab::gait::GaitLabel)],
    out: Option<&Path>,
) -> Result<(), CliError> {
    match out {
        Some(path) => {
            write_rpd_csv(rows, path).map_err(|e| CliError::Runtime(anyhow::anyhow!(e)))?;
            println!("wrote {} row(s) to {}", rows.len(), path.display());
        }
        None => {
            let mut text = String::from("time_s,rpd_lf,rpd_rh,rpd_lh,label\n");
            for (t, rpd, label) in rows {
                let _ = writeln!(
                    text,
                    "{t:.6},{:.6},{:.6},{:.6},{label}",
                    rpd[0], rpd[1], rpd[2]
                );
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn cmd_experiment(args: &ConfigArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let dir = config.output.directory.clone();
    let mask = config.experiment.mask;
    let runtime = |e: gaitlab::harness::HarnessError| CliError::Runtime(anyhow::anyhow!(e));
    let io = |e: gaitlab::harness::OutputError| CliError::Runtime(anyhow::anyhow!(e));

    let (outputs, summary, seeds) = match config.experiment.kind {
        ExperimentKind::Balance => {
            let result = balance_experiment(&config).map_err(runtime)?;
            let outputs = write_balance_csvs(&result, &dir).map_err(io)?;
            let summary = format!(
                "balance: {} rollouts ({} failed), median mean-GRF per leg: {}",
                result.samples.len() + result.failures.len(),
                result.failures.len(),
                Leg::ALL
                    .iter()
                    .map(|l| format!(
                        "{}={:.4}",
                        l.label(),
                        result.leg_quantile(*l, 0.5).unwrap_or(f64::NAN)
                    ))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
            let seeds: Vec<u64> = result
                .samples
                .iter()
                .map(|s| s.seed)
                .chain(result.failures.iter().map(|f| f.0))
                .collect();
            (outputs, summary, seeds)
        }
        ExperimentKind::Emergence => {
            let result = emergence_experiment(&config).map_err(runtime)?;
            let outputs = write_emergence_csvs(&result, &dir).map_err(io)?;
            let summary = format!(
                "emergence: {} rollouts, stationary fraction {:.3}",
                result.rollouts.len(),
                result.stationary_fraction()
            );
            let seeds = result.rollouts.iter().map(|r| r.seed).collect();
            (outputs, summary, seeds)
        }
        ExperimentKind::Disturbance => {
            let result = disturbance_experiment(&config).map_err(runtime)?;
            let outputs = write_disturbance_csv(&result, &dir).map_err(io)?;
            let mut summary = String::from("disturbance failure rates (mean% ± std%):");
            for row in &result.rows {
                let _ = write!(
                    summary,
                    " {:.1}:{:.2}±{:.2}",
                    row.magnitude,
                    row.mean_percent(),
                    row.std_percent()
                );
            }
            (outputs, summary, vec![config.seed.base])
        }
    };

    let mut manifest = RunManifest::new(
        &format!("experiment:{}", config.experiment.kind.label()),
        &config,
        mask,
        seeds,
    );
    for path in &outputs {
        if let Some(name) = path.file_name() {
            manifest.outputs.push(name.to_string_lossy().into_owned());
        }
    }
    let manifest_path = write_manifest(&manifest, &dir).map_err(io)?;
    println!("config digest: {}", config.digest());
    println!("{summary}");
    println!("wrote {} file(s) and {}", outputs.len(), manifest_path.display());
    Ok(())
}
