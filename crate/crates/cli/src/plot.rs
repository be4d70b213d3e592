use std::fmt::Write as _;
use std::path::Path;

use augforge_core::augment::{read_trace_csv, TraceRow};

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// One line: `(reconstruction index, F-score %)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Eval,
    Test,
}

/// Accepted iterations of a trace as percentages; a score outside [0, 1]
/// is a validation error.
pub fn series_from_trace(label: &str, rows: &[TraceRow], metric: Metric) -> CliResult<Series> {
    let mut points = Vec::new();
    for r in rows {
        let v = match metric {
            Metric::Eval => r.s_eval,
            Metric::Test => r.s_test,
        };
        if let Some(v) = v {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Config(format!(
                    "{label}: iteration {} has F-score {v} outside [0, 1]",
                    r.iteration
                )));
            }
            points.push((r.iteration, 100.0 * v));
        }
    }
    Ok(Series {
        label: label.to_string(),
        points,
    })
}

/// Legend label for a trace file: its stem, or the parent directory name
/// when the stem is the generic `trace`.
pub fn trace_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem == "trace" {
        if let Some(parent) = path.parent().and_then(|p| p.file_name()) {
            return parent.to_string_lossy().into_owned();
        }
    }
    stem
}

pub fn load_series(paths: &[impl AsRef<Path>], metric: Metric) -> CliResult<Vec<Series>> {
    paths
        .iter()
        .map(|p| {
            let p = p.as_ref();
            let rows = read_trace_csv(p).map_err(|e| match e {
                augforge_core::Error::Io(io) => CliError::runtime("plot", format!("{}: {io}", p.display())),
                other => CliError::Config(format!("{}: {other}", p.display())),
            })?;
            series_from_trace(&trace_label(p), &rows, metric)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn y_range(series: &[Series], baseline: Option<f64>) -> (f64, f64) {
    let values = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).chain(baseline);
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 100.0);
    }
    let lo = ((lo - 1.0) / 5.0).floor() * 5.0;
    let hi = ((hi + 1.0) / 5.0).ceil() * 5.0;
    (lo.max(0.0), hi.min(100.0))
}

fn tick_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    [1.0, 2.0, 5.0, 10.0, 20.0, 25.0, 50.0, 100.0]
        .into_iter()
        .find(|&s| s >= raw)
        .unwrap_or(100.0)
}

/// Renders an F-score-vs-reconstructions line chart. `baseline` (in %)
/// draws a dashed horizontal rule.
pub fn render_svg(series: &[Series], title: &str, baseline: Option<f64>) -> CliResult<String> {
    if let Some(b) = baseline {
        if !(0.0..=100.0).contains(&b) {
            return Err(CliError::Config(format!("baseline {b} outside [0, 100]")));
        }
    }
    for s in series {
        if let Some(p) = s.points.iter().find(|p| !(0.0..=100.0).contains(&p.1)) {
            return Err(CliError::Config(format!("{}: value {} outside [0, 100]", s.label, p.1)));
        }
    }
    let x_max = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).max().unwrap_or(1).max(1);
    let (y_lo, y_hi) = y_range(series, baseline);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: usize| {
        if x_max == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + (x as f64 - 1.0) / (x_max as f64 - 1.0) * plot_w
        }
    };
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    let _ = writeln!(out, r#"<g class="axes" stroke="black">"#);
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{}" x2="{}" y2="{}"/>"#, TOP + plot_h, LEFT + plot_w, TOP + plot_h);
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}"/>"#, TOP + plot_h);
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r#"<g class="ticks">"#);
    let x_step = tick_step(x_max as f64, 10.0) as usize;
    let mut x = 1;
    while x <= x_max {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"#,
            px(x),
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            x
        );
        x += x_step;
    }
    let y_step = tick_step(y_hi - y_lo, 8.0);
    let mut y = y_lo;
    while y <= y_hi + 1e-9 {
        let _ = writeln!(
            out,
            r##"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="#dddddd"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"##,
            LEFT,
            py(y),
            LEFT + plot_w,
            LEFT - 6.0,
            py(y) + 4.0,
            y
        );
        y += y_step;
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">Number of reconstructions</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">F-score (%)</text>"#,
        TOP + plot_h / 2.0
    );

    if let Some(b) = baseline {
        let _ = writeln!(
            out,
            r##"<line class="baseline" x1="{LEFT}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#555555" stroke-dasharray="6 4"/>"##,
            py(b),
            LEFT + plot_w
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
    }

    let lx = LEFT + plot_w + 16.0;
    let _ = writeln!(out, r#"<g class="legend">"#);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    if baseline.is_some() {
        let ly = TOP + 10.0 + 20.0 * series.len() as f64;
        let _ = writeln!(
            out,
            r##"<g class="legend-baseline"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="#555555" stroke-dasharray="6 4"/><text x="{}" y="{}">baseline</text></g>"##,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}
