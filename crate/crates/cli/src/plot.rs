//! Value-vs-time charts of a concentration series.
//!
//! The y axis always spans exactly [0, 1]. Missing days break the line: each
//! run of consecutive observed days becomes its own SVG polyline (or a run of
//! marks in the terminal chart).

use std::fmt::Write as _;

use chrono::NaiveDate;
use icecast_core::kalman::DailySeries;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

/// Consecutive observed stretches as `(day index, value)` lists.
fn runs(series: &DailySeries) -> Vec<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (i, v) in series.values.iter().enumerate() {
        match v {
            Some(y) => current.push((i, *y)),
            None if !current.is_empty() => out.push(std::mem::take(&mut current)),
            None => {}
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

pub fn svg(series: &DailySeries, title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let span = (series.len().max(2) - 1) as f64;
    let x = |i: usize| LEFT + plot_w * i as f64 / span;
    let y = |v: f64| TOP + plot_h * (1.0 - v);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    // Axes.
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let ty = y(tick);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ty:.2}" x2="{LEFT}" y2="{ty:.2}" stroke="black"/><text x="{}" y="{:.2}" font-size="12" text-anchor="end">{tick:.2}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            ty + 4.0
        );
    }
    let last = series.len().saturating_sub(1);
    let mut date_ticks = vec![0, last / 2, last];
    date_ticks.dedup();
    for i in date_ticks {
        let tx = x(i);
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            series.date_of(i)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">date</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">concentration</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for run in runs(series) {
        let pts: Vec<String> = run.iter().map(|&(i, v)| format!("{:.2},{:.2}", x(i), y(v))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        if run.len() == 1 {
            let (i, v) = run[0];
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"#,
                x(i),
                y(v)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub const ASCII_COLUMNS: usize = 72;
pub const ASCII_ROWS: usize = 11;

/// Fixed-size terminal chart. Days are bucketed into columns; a column with
/// no observed day stays blank.
pub fn ascii(series: &DailySeries) -> String {
    let n = series.len();
    let cols = ASCII_COLUMNS.min(n.max(1));
    let mut grid = vec![vec![' '; cols]; ASCII_ROWS];
    for c in 0..cols {
        let lo = c * n / cols;
        let hi = ((c + 1) * n / cols).max(lo + 1);
        let vals: Vec<f64> = series.values[lo..hi.min(n)].iter().flatten().copied().collect();
        if vals.is_empty() {
            continue;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let row = ((1.0 - mean.clamp(0.0, 1.0)) * (ASCII_ROWS - 1) as f64).round() as usize;
        grid[row][c] = '*';
    }
    let mut out = String::new();
    for (r, line) in grid.iter().enumerate() {
        let label = match r {
            0 => "1.0",
            _ if r == ASCII_ROWS / 2 => "0.5",
            _ if r == ASCII_ROWS - 1 => "0.0",
            _ => "",
        };
        let body: String = line.iter().collect();
        let _ = writeln!(out, "{label:>4} |{}", body.trim_end());
    }
    let _ = writeln!(out, "     +{}", "-".repeat(cols));
    let first = series.start;
    let last: NaiveDate = series.end();
    let gap = (cols + 1).saturating_sub(20).max(1);
    let _ = writeln!(out, "      {first}{}{last}", " ".repeat(gap));
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
