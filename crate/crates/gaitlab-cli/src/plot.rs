//! Minimal static SVG renderings of the experiment summary CSVs. The CSVs
//! remain the authoritative output; these are quick-look figures.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    /// Per-leg episode-mean GRF distribution (fig4_balance.csv).
    Balance,
    /// Initial vs final RPD scatter (fig5_rpd.csv).
    Rpd,
    /// Gait label counts over time (fig6_labels.csv).
    Labels,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub fn render(input: &Path, out: &Path, kind: PlotKind) -> Result<()> {
    let text = std::fs::read_to_string(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let svg = match kind {
        PlotKind::Balance => balance_svg(&text)?,
        PlotKind::Rpd => rpd_svg(&text)?,
        PlotKind::Labels => labels_svg(&text)?,
    };
    if let Some(parent) = out.parent() {
        std::fs::create_dir_all(parent).ok();
    }
    std::fs::write(out, svg).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    )
}

fn axis_box() -> String {
    format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )
}

fn x_map(v: f64, lo: f64, hi: f64) -> f64 {
    MARGIN + (v - lo) / (hi - lo) * (WIDTH - 2.0 * MARGIN)
}

fn y_map(v: f64, lo: f64, hi: f64) -> f64 {
    HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN)
}

fn label_color(label: &str) -> &'static str {
    match label {
        "trot" => "#1f77b4",
        "pace" => "#ff7f0e",
        "bound" => "#2ca02c",
        "pronk" => "#d62728",
        "transition" => "#9467bd",
        _ => "#7f7f7f",
    }
}

fn parse_rows(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head: Vec<String> = lines
        .next()
        .context("empty CSV")?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    Ok((head, rows))
}

fn column(head: &[String], name: &str) -> Result<usize> {
    head.iter()
        .position(|h| h == name)
        .with_context(|| format!("column `{name}` missing"))
}

/// Quantile whisker plot of per-leg episode-mean GRF.
fn balance_svg(text: &str) -> Result<String> {
    let (head, rows) = parse_rows(text)?;
    let leg_col = column(&head, "leg")?;
    let val_col = column(&head, "mean_grf")?;
    let legs = ["RF", "LF", "RH", "LH"];
    let mut per_leg: [Vec<f64>; 4] = Default::default();
    for row in &rows {
        if let Some(slot) = legs.iter().position(|l| *l == row[leg_col]) {
            per_leg[slot].push(row[val_col].parse()?);
        }
    }
    if per_leg.iter().all(|v| v.is_empty()) {
        bail!("no balance samples found");
    }
    let mut svg = header("episode-mean GRF per leg");
    svg.push_str(&axis_box());
    let (lo, hi) = (0.0, 0.6);
    for frac in [0.0, 0.25, 0.5] {
        let y = y_map(frac, lo, hi);
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#cccccc\" stroke-dasharray=\"4 3\"/>\
<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{frac:.2}</text>",
            WIDTH - MARGIN,
            MARGIN - 6.0,
            y + 4.0
        );
    }
    for (slot, values) in per_leg.iter_mut().enumerate() {
        if values.is_empty() {
            continue;
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            let pos = p * (values.len() - 1) as f64;
            let i = pos.floor() as usize;
            let frac = pos - i as f64;
            values[i] * (1.0 - frac) + values[(i + 1).min(values.len() - 1)] * frac
        };
        let x = x_map(slot as f64 + 0.5, 0.0, 4.0);
        let (w05, w25, w50, w75, w95) = (q(0.05), q(0.25), q(0.5), q(0.75), q(0.95));
        let _ = writeln!(
            svg,
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\
<rect x=\"{}\" y=\"{}\" width=\"40\" height=\"{}\" fill=\"#9ecae1\" stroke=\"black\"/>\
<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" stroke-width=\"2\"/>\
<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            y_map(w05, lo, hi),
            y_map(w95, lo, hi),
            x - 20.0,
            y_map(w75, lo, hi),
            (y_map(w25, lo, hi) - y_map(w75, lo, hi)).max(1.0),
            x - 20.0,
            y_map(w50, lo, hi),
            x + 20.0,
            y_map(w50, lo, hi),
            HEIGHT - MARGIN + 20.0,
            legs[slot]
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Scatter of initial (gray) and final (colored) RPD in the LF/RH plane.
fn rpd_svg(text: &str) -> Result<String> {
    let (head, rows) = parse_rows(text)?;
    let init_lf = column(&head, "init_lf")?;
    let init_rh = column(&head, "init_rh")?;
    let final_lf = column(&head, "final_lf")?;
    let final_rh = column(&head, "final_rh")?;
    let label_col = column(&head, "final_label")?;
    let mut svg = header("RPD: initial (gray) vs final (colored by label)");
    svg.push_str(&axis_box());
    let (lo, hi) = (0.0, 2.0 * PI);
    // Ideal gait markers in this projection.
    for (name, lf, rh) in [
        ("trot", PI, PI),
        ("pace", PI, 0.0),
        ("bound", 0.0, PI),
        ("pronk", 0.0, 0.0),
    ] {
        let (x, y) = (x_map(lf, lo, hi), y_map(rh, lo, hi));
        let _ = writeln!(
            svg,
            "<circle cx=\"{x}\" cy=\"{y}\" r=\"7\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\
<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{name}</text>",
            label_color(name),
            x + 9.0,
            y - 6.0
        );
    }
    for row in &rows {
        let (ix, iy): (f64, f64) = (row[init_lf].parse()?, row[init_rh].parse()?);
        let _ = writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"2\" fill=\"#bbbbbb\"/>",
            x_map(ix, lo, hi),
            y_map(iy, lo, hi)
        );
        if let (Ok(fx), Ok(fy)) = (row[final_lf].parse::<f64>(), row[final_rh].parse::<f64>()) {
            if fx.is_finite() && fy.is_finite() {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>",
                    x_map(fx, lo, hi),
                    y_map(fy, lo, hi),
                    label_color(&row[label_col])
                );
            }
        }
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">rpd_lf (rad)</text>\
<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">rpd_rh (rad)</text>",
        WIDTH / 2.0,
        HEIGHT - 16.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Label counts over time as polylines.
fn labels_svg(text: &str) -> Result<String> {
    let (head, rows) = parse_rows(text)?;
    let time_col = column(&head, "time_s")?;
    let series: Vec<&str> = ["trot", "pace", "bound", "pronk", "transition", "none"]
        .into_iter()
        .filter(|name| head.iter().any(|h| h == name))
        .collect();
    if rows.is_empty() {
        bail!("no label rows found");
    }
    let t_max: f64 = rows
        .iter()
        .map(|r| r[time_col].parse::<f64>().unwrap_or(0.0))
        .fold(0.0, f64::max);
    let mut n_max: f64 = 1.0;
    for row in &rows {
        for name in &series {
            let col = column(&head, name)?;
            n_max = n_max.max(row[col].parse::<f64>().unwrap_or(0.0));
        }
    }
    let mut svg = header("gait labels over time");
    svg.push_str(&axis_box());
    for name in &series {
        let col = column(&head, name)?;
        let mut points = String::new();
        for row in &rows {
            let t: f64 = row[time_col].parse()?;
            let n: f64 = row[col].parse()?;
            let _ = write!(points, "{:.1},{:.1} ", x_map(t, 0.0, t_max), y_map(n, 0.0, n_max));
        }
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
            points.trim_end(),
            label_color(name)
        );
    }
    let mut legend_y = MARGIN + 14.0;
    for name in &series {
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{}\"/>\
<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>",
            WIDTH - MARGIN - 110.0,
            legend_y - 10.0,
            label_color(name),
            WIDTH - MARGIN - 92.0,
            legend_y
        );
        legend_y += 16.0;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">time (s)</text>",
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
