//! End-to-end tests of the `gaitlab` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gaitlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitlab"))
        .args(args)
        .current_dir(dir)
        .env("GAITLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const MINIMAL: &str = r#"
[experiment]
duration_s = 1.0
v_x = 1.0

[output]
directory = "out"

[seed]
base = 7
count = 1
"#;

#[test]
fn simulate_writes_decimated_log_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = gaitlab(&["simulate", "--config", &config], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("config digest:"));
    let log_path = dir.path().join("out/rollout_7.csv");
    let text = fs::read_to_string(&log_path).unwrap();
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("time_s") && !l.is_empty())
        .count();
    // 1 s at 500 Hz decimated by 5 -> 100 rows.
    assert_eq!(rows, 100);
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn simulate_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let run = |out_dir: &str| {
        let out = gaitlab(
            &["simulate", "--config", &config, "--out", out_dir, "--seed", "7"],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read(dir.path().join(out_dir).join("rollout_7.csv")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[experiment]\nduration_s = 1.0\nsigma_max = 3.0\n",
    );
    let out = gaitlab(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sigma_max"), "{}", stderr(&out));
}

#[test]
fn invalid_value_exits_2_and_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "[oscillator]\ndt = -0.5\n");
    let out = gaitlab(&["simulate", "--config", &config], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("oscillator.dt"), "{}", stderr(&out));
}

#[test]
fn override_flag_patches_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MINIMAL);
    let out = gaitlab(
        &[
            "simulate",
            "--config",
            &config,
            "--out",
            "ov",
            "--override",
            "seed.count=2",
            "--override",
            "output.decimation=10",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("ov/rollout_7.csv").exists());
    assert!(dir.path().join("ov/rollout_8.csv").exists());
    let text = fs::read_to_string(dir.path().join("ov/rollout_7.csv")).unwrap();
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("time_s") && !l.is_empty())
        .count();
    assert_eq!(rows, 50);
}

#[test]
fn fixed_points_table_matches_standing_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = gaitlab(
        &[
            "fixed-points",
            "--omega", "1", "--sigma", "4", "--xi", "1", "--grf", "0.25",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("1.570796") && text.contains("unstable"), "{text}");
    assert!(text.contains("4.712389") && text.contains("stable"), "{text}");

    let marginal = gaitlab(
        &[
            "fixed-points",
            "--omega", "1", "--sigma", "4", "--xi", "0", "--grf", "0.25",
        ],
        dir.path(),
    );
    let text = stdout(&marginal);
    assert!(text.contains("0.000000") && text.contains("marginal"), "{text}");

    let none = gaitlab(
        &[
            "fixed-points",
            "--omega", "1", "--sigma", "4", "--xi", "1", "--grf", "0",
        ],
        dir.path(),
    );
    assert!(stdout(&none).contains("no fixed points"));

    let bad = gaitlab(
        &[
            "fixed-points",
            "--omega", "1", "--sigma", "-4", "--xi", "1", "--grf", "0.25",
        ],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(2));
}

fn touchdown_csv(rpd: [f64; 3], freq: f64, cycles: usize) -> String {
    let period = 1.0 / freq;
    let mut text = String::from("leg,time_s\n");
    for k in 0..cycles {
        let base = k as f64 * period;
        text.push_str(&format!("RF,{base:.6}\n"));
        for (leg, offset) in ["LF", "RH", "LH"].iter().zip(rpd.iter()) {
            text.push_str(&format!(
                "{leg},{:.6}\n",
                base + offset / std::f64::consts::TAU * period
            ));
        }
    }
    text
}

#[test]
fn classify_trot_touchdown_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("trot.csv");
    fs::write(
        &input,
        touchdown_csv([std::f64::consts::PI, std::f64::consts::PI, 0.0], 2.0, 5),
    )
    .unwrap();
    let out = gaitlab(&["classify", input.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let labels: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(labels.len(), 4);
    assert!(labels.iter().all(|l| *l == "trot"), "{text}");
}

#[test]
fn classify_pronk_touchdown_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pronk.csv");
    fs::write(&input, touchdown_csv([0.0, 0.0, 0.0], 2.0, 4)).unwrap();
    let out = gaitlab(&["classify", input.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).lines().skip(1).all(|l| l.ends_with("pronk")));
}

#[test]
fn classify_single_reference_touchdown_is_empty_with_reason() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("one.csv");
    fs::write(&input, "leg,time_s\nRF,0.0\nLF,0.2\n").unwrap();
    let out = gaitlab(&["classify", input.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1, "header only");
    assert!(stderr(&out).contains("reference"), "{}", stderr(&out));
}

#[test]
fn classify_malformed_row_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "leg,time_s\nRF,0.0\nXX,0.5\n").unwrap();
    let out = gaitlab(&["classify", input.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(stderr(&out).contains(":3:"), "{}", stderr(&out));
}

#[test]
fn classify_accepts_rollout_logs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[experiment]
duration_s = 4.0
v_x = 1.0

[oscillator]
init_phases = [4.71238898038469, 1.5707963267948966, 1.5707963267948966, 4.71238898038469]

[output]
directory = "logs"
decimation = 1

[seed]
base = 3
count = 1
"#,
    );
    let sim = gaitlab(&["simulate", "--config", &config], dir.path());
    assert!(sim.status.success(), "{}", stderr(&sim));
    let log = dir.path().join("logs/rollout_3.csv");
    let out = gaitlab(&["classify", log.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let trot_rows = text.lines().skip(1).filter(|l| l.ends_with("trot")).count();
    assert!(trot_rows >= 5, "{text}");
}

#[test]
fn experiment_balance_writes_16_rows_for_4_rollouts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[experiment]
kind = "balance"
n_rollouts = 4
duration_s = 2.0
v_x = 0.0

[oscillator]
init_phases = [4.71238898038469, 4.71238898038469, 4.71238898038469, 4.71238898038469]

[output]
directory = "bal"

[seed]
base = 1
"#,
    );
    let out = gaitlab(&["experiment", "--config", &config], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("bal/fig4_balance.csv")).unwrap();
    assert_eq!(text.lines().count() - 1, 16);
    assert!(dir.path().join("bal/fig4_balance_summary.csv").exists());
    assert!(dir.path().join("bal/manifest.json").exists());
}

#[test]
fn experiment_emergence_with_zero_sigma_tracks_initial_rpd() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[experiment]
kind = "emergence"
n_rollouts = 3
duration_s = 15.0
v_x = 1.0
eval_sigma = 0.0

[output]
directory = "em"

[seed]
base = 11
"#,
    );
    let out = gaitlab(&["experiment", "--config", &config], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("em/fig5_rpd.csv")).unwrap();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        for i in 0..3 {
            let init: f64 = fields[2 + i].parse().unwrap();
            let fin: f64 = fields[5 + i].parse().unwrap();
            let diff = (fin - init).rem_euclid(std::f64::consts::TAU);
            let circ = diff.min(std::f64::consts::TAU - diff);
            assert!(circ < 0.05, "component {i} drifted {circ} in {line}");
        }
    }
    assert!(dir.path().join("em/fig6_labels.csv").exists());
}

#[test]
fn experiment_disturbance_writes_magnitude_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[experiment]
kind = "disturbance"
settle_s = 1.0
observe_s = 1.0
magnitudes = [1.5, 2.0, 2.5, 3.0, 3.5]
seed_families = 1

[experiment.schedule]
groups = 2
group_size = 4
group_spacing_s = 0.01
angle_spacing_deg = 90.0

[oscillator]
init_phases = [4.71238898038469, 1.5707963267948966, 1.5707963267948966, 4.71238898038469]

[output]
directory = "dist"

[seed]
base = 5
"#,
    );
    let out = gaitlab(&["experiment", "--config", &config], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("dist/table1_failures.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for (row, mag) in rows.iter().zip(["1.5", "2.0", "2.5", "3.0", "3.5"]) {
        assert!(row.starts_with(mag), "{row}");
    }
}

#[test]
fn experiment_summaries_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[experiment]
kind = "emergence"
n_rollouts = 2
duration_s = 12.0
v_x = 1.0

[output]
directory = "unused"

[seed]
base = 21
"#,
    );
    let run = |out_dir: &str| {
        let out = gaitlab(
            &["experiment", "--config", &config, "--out", out_dir],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
        (
            fs::read(dir.path().join(out_dir).join("fig5_rpd.csv")).unwrap(),
            fs::read(dir.path().join(out_dir).join("fig6_labels.csv")).unwrap(),
        )
    };
    let (a5, a6) = run("r1");
    let (b5, b6) = run("r2");
    assert_eq!(a5, b5);
    assert_eq!(a6, b6);
}

#[test]
fn plot_renders_svg_from_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"
[experiment]
kind = "emergence"
n_rollouts = 2
duration_s = 12.0
v_x = 1.0

[output]
directory = "plots"

[seed]
base = 31
"#,
    );
    let out = gaitlab(&["experiment", "--config", &config], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let rpd_csv = dir.path().join("plots/fig5_rpd.csv");
    let svg_path = dir.path().join("plots/fig5.svg");
    let out = gaitlab(
        &[
            "plot",
            rpd_csv.to_str().unwrap(),
            "--out",
            svg_path.to_str().unwrap(),
            "--kind",
            "rpd",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let labels_csv = dir.path().join("plots/fig6_labels.csv");
    let labels_svg = dir.path().join("plots/fig6.svg");
    let out = gaitlab(
        &[
            "plot",
            labels_csv.to_str().unwrap(),
            "--out",
            labels_svg.to_str().unwrap(),
            "--kind",
            "labels",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
}
