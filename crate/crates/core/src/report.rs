//! Deterministic text renderings of a model comparison.
//!
//! Every renderer formats numbers with fixed precision and emits `\n` line
//! endings, so identical inputs give byte-identical files.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evaluation::{ModelComparison, TrajectoryErrorReport};

/// Bar colours, cycled per model.
const PALETTE: [&str; 4] = ["#1f5fa8", "#8c8c8c", "#c0392b", "#27ae60"];

fn check(comparison: &ModelComparison) -> Result<()> {
    let m = comparison.models.len();
    if m == 0 {
        return Err(Error::Empty("models"));
    }
    if comparison.pooled.len() != m || comparison.rows.iter().any(|r| r.values.len() != m) {
        return Err(Error::param("comparison", "every row and summary needs one value per model"));
    }
    if comparison
        .rows
        .iter()
        .flat_map(|r| &r.values)
        .chain(comparison.pooled.iter().flat_map(|s| [&s.p63, &s.p95, &s.max]))
        .any(|v| !v.is_finite())
    {
        return Err(Error::param("comparison", "values must be finite"));
    }
    Ok(())
}

/// Percentile table as Markdown.
pub fn summary_markdown(comparison: &ModelComparison) -> Result<String> {
    check(comparison)?;
    let mut out = String::new();
    out.push_str("| method | 63rd percentile | 95th percentile | maximum |\n");
    out.push_str("|---|---:|---:|---:|\n");
    for (name, s) in comparison.models.iter().zip(&comparison.pooled) {
        writeln!(out, "| {name} | {:.3} m | {:.3} m | {:.3} m |", s.p63, s.p95, s.max).unwrap();
    }
    Ok(out)
}

/// Percentile table as CSV.
pub fn summary_csv(comparison: &ModelComparison) -> Result<String> {
    check(comparison)?;
    let mut out = String::from("model,p63,p95,max\n");
    for (name, s) in comparison.models.iter().zip(&comparison.pooled) {
        writeln!(out, "{name},{:.6},{:.6},{:.6}", s.p63, s.p95, s.max).unwrap();
    }
    Ok(out)
}

/// Per-manoeuvre errors as CSV, one column per model.
pub fn maneuver_csv(comparison: &ModelComparison) -> Result<String> {
    check(comparison)?;
    let mut out = String::from("maneuver");
    for name in &comparison.models {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for row in &comparison.rows {
        out.push_str(&row.maneuver_id);
        for v in &row.values {
            write!(out, ",{v:.6}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Per-manoeuvre errors as Markdown, marking rows where `candidate` beats
/// `baseline`.
pub fn maneuver_markdown(comparison: &ModelComparison, baseline: usize, candidate: usize) -> Result<String> {
    check(comparison)?;
    let m = comparison.models.len();
    if baseline >= m || candidate >= m {
        return Err(Error::param("models", "baseline or candidate index out of range"));
    }
    let mut out = String::from("| maneuver |");
    for name in &comparison.models {
        write!(out, " {name} |").unwrap();
    }
    out.push_str(" improvement |\n|---|");
    out.push_str(&"---:|".repeat(m + 1));
    out.push('\n');
    for row in &comparison.rows {
        write!(out, "| {} |", row.maneuver_id).unwrap();
        for v in &row.values {
            write!(out, " {v:.3} |").unwrap();
        }
        let gain = row.values[baseline] - row.values[candidate];
        if gain > 0.0 {
            writeln!(out, " **{gain:.3}** |").unwrap();
        } else {
            writeln!(out, " {gain:.3} |").unwrap();
        }
    }
    Ok(out)
}

/// The whole comparison as pretty JSON with a trailing newline.
pub fn comparison_json(comparison: &ModelComparison) -> Result<String> {
    check(comparison)?;
    let mut s = serde_json::to_string_pretty(comparison)?;
    s.push('\n');
    Ok(s)
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.1;
    }
    let step = 10f64.powf(v.log10().floor() - 1.0);
    (v / step).ceil() * step
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Grouped bar chart of the per-manoeuvre errors.
pub fn maneuver_bars_svg(comparison: &ModelComparison) -> Result<String> {
    check(comparison)?;
    let (width, height) = (640.0, 320.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let peak = comparison.rows.iter().flat_map(|r| &r.values).fold(0.0f64, |a, &b| a.max(b));
    let y_max = nice_ceiling(peak);
    let groups = comparison.rows.len().max(1) as f64;
    let models = comparison.models.len() as f64;
    let group_w = plot_w / groups;
    let bar_w = group_w * 0.8 / models;
    let y = |v: f64| top + plot_h * (1.0 - v / y_max);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#).unwrap();
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let yy = y(v);
        writeln!(s, r##"<line x1="{left:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##, left + plot_w).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, left - 6.0, yy + 4.0).unwrap();
    }
    for (g, row) in comparison.rows.iter().enumerate() {
        let x0 = left + group_w * g as f64 + group_w * 0.1;
        for (m, v) in row.values.iter().enumerate() {
            let x = x0 + bar_w * m as f64;
            writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}"><title>{}: {v:.3} m</title></rect>"#,
                y(*v),
                top + plot_h - y(*v),
                PALETTE[m % PALETTE.len()],
                escape(&comparison.models[m])
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + group_w * (g as f64 + 0.5),
            top + plot_h + 16.0,
            escape(&row.maneuver_id)
        )
        .unwrap();
    }
    writeln!(s, r##"<line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000000"/>"##, top + plot_h, left + plot_w, top + plot_h).unwrap();
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">maneuver</text>"#, left + plot_w / 2.0, height - 10.0).unwrap();
    writeln!(s, r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">trajectory error [m]</text>"#, top + plot_h / 2.0, top + plot_h / 2.0).unwrap();
    for (m, name) in comparison.models.iter().enumerate() {
        let lx = left + 10.0 + 130.0 * m as f64;
        writeln!(s, r#"<rect x="{lx:.2}" y="12" width="10" height="10" fill="{}"/>"#, PALETTE[m % PALETTE.len()]).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="21">{}</text>"#, lx + 14.0, escape(name)).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Error-over-time polylines, one per report.
pub fn error_over_time_svg(reports: &[(String, TrajectoryErrorReport)]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Empty("reports"));
    }
    let (width, height) = (640.0, 280.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 40.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let (t0, t1, peak) = reports.iter().flat_map(|(_, r)| r.times.iter().zip(&r.errors)).fold(
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64),
        |(a, b, c), (&t, &e)| (a.min(t), b.max(t), c.max(e)),
    );
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::Empty("report samples"));
    }
    let span = (t1 - t0).max(1e-9);
    let y_max = nice_ceiling(peak);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(s, r#"<rect width="{width:.0}" height="{height:.0}" fill="white"/>"#).unwrap();
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let yy = top + plot_h * (1.0 - v / y_max);
        writeln!(s, r##"<line x1="{left:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##, left + plot_w).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, left - 6.0, yy + 4.0).unwrap();
    }
    for (k, (name, r)) in reports.iter().enumerate() {
        let points: Vec<String> = r
            .times
            .iter()
            .zip(&r.errors)
            .map(|(&t, &e)| format!("{:.2},{:.2}", left + plot_w * (t - t0) / span, top + plot_h * (1.0 - e / y_max)))
            .collect();
        let colour = PALETTE[k % PALETTE.len()];
        writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, points.join(" ")).unwrap();
        let lx = left + 10.0 + 130.0 * k as f64;
        writeln!(s, r#"<rect x="{lx:.2}" y="12" width="10" height="10" fill="{colour}"/>"#).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="21">{}</text>"#, lx + 14.0, escape(name)).unwrap();
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time [s] ({t0:.2} to {t1:.2})</text>"#, left + plot_w / 2.0, height - 10.0).unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}
