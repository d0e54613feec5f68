//! Deterministic line plots of trace columns.

use std::fmt::Write;

use crate::error::CliError;
use crate::trace::TraceTable;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Plots `channels` against `t` (or `k`). Missing channels are an error.
pub fn render_svg(table: &TraceTable, channels: &[String]) -> Result<String, CliError> {
    let series: Vec<(&String, Vec<f64>)> = channels
        .iter()
        .map(|c| {
            table
                .column(c)
                .map(|v| (c, v))
                .ok_or_else(|| CliError::Config(format!("output.channels: trace has no column `{c}`")))
        })
        .collect::<Result<_, _>>()?;
    let xs = table.column("t").or_else(|| table.column("k")).unwrap_or_default();
    let (x0, x1) = range(xs.iter().copied());
    let (y0, y1) = range(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1"><line x1="{l}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{l}" y1="{t}" x2="{l}" y2="{b}"/></g>"#);
    let _ = writeln!(
        s,
        r#"<g font-family="monospace" font-size="11"><text x="{l}" y="{:.1}">{x0:.4}</text><text x="{r}" y="{:.1}" text-anchor="end">{x1:.4}</text><text x="{:.1}" y="{b}" text-anchor="end">{y0:.4}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{y1:.4}</text></g>"#,
        b + 15.0,
        b + 15.0,
        l - 4.0,
        l - 4.0,
        t + 4.0
    );
    for (i, (_, ys)) in series.iter().enumerate() {
        let mut points = String::new();
        for (x, y) in xs.iter().zip(ys) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(points, "{:.3},{:.3} ", sx(*x), sy(*y));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            PALETTE[i % PALETTE.len()],
            points.trim_end()
        );
    }
    for (i, (name, _)) in series.iter().enumerate() {
        let y = t + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<g font-family="monospace" font-size="11"><line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            r - 90.0,
            y,
            r - 70.0,
            y,
            PALETTE[i % PALETTE.len()],
            r - 65.0,
            y + 4.0,
            name
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
