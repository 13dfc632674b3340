//! Minimal static SVG charts. Coordinates are printed with fixed precision
//! so identical inputs give identical bytes.

use std::fmt::Write as _;

use super::Distribution;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

impl<'a> Series<'a> {
    pub fn new(name: &'a str, values: &'a [f64]) -> Self {
        Self { name, values }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut out = String::new();
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="100%" height="100%" fill="white"/>
<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    out
}

/// Value range padded so flat data still gets a visible band.
fn extent<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn y_axis(out: &mut String, lo: f64, hi: f64, x0: f64, x1: f64) {
    let to_y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = to_y(v);
        writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{y:.2}" x2="{x1:.1}" y2="{y:.2}" stroke="#dddddd"/>
<text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.2}</text>"##,
            x0 - 4.0,
            y + 3.0
        )
        .unwrap();
    }
}

pub fn line_chart(title: &str, x_label: &str, series: &[Series<'_>]) -> String {
    let mut out = header(title);
    let (lo, hi) = extent(series.iter().flat_map(|s| s.values.iter()));
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    y_axis(&mut out, lo, hi, x0, x1);
    let span = (n.max(2) - 1) as f64;
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = x0 + i as f64 / span * (x1 - x0);
                let y = HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            points.join(" "),
            x0 + 8.0,
            MARGIN + 14.0 * k as f64,
            escape(s.name)
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>
</svg>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    )
    .unwrap();
    out
}

/// One panel per group, each with its own vertical scale.
pub fn box_plot(title: &str, groups: &[(&str, &Distribution)]) -> String {
    let mut out = header(title);
    let panel = (WIDTH - MARGIN) / groups.len().max(1) as f64;
    for (k, (name, d)) in groups.iter().enumerate() {
        let (lo, hi) = extent([d.min, d.max].iter());
        let to_y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
        let left = MARGIN + k as f64 * panel;
        y_axis(&mut out, lo, hi, left, left + panel - MARGIN);
        let cx = left + (panel - MARGIN) / 2.0;
        let half = (panel - MARGIN) / 6.0;
        let color = COLORS[k % COLORS.len()];
        writeln!(
            out,
            r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#333333"/>
<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.4" stroke="#333333"/>
<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000000" stroke-width="2"/>
<text x="{cx:.2}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"##,
            to_y(d.min),
            to_y(d.max),
            cx - half,
            to_y(d.q3),
            2.0 * half,
            (to_y(d.q1) - to_y(d.q3)).max(0.5),
            cx - half,
            to_y(d.median),
            cx + half,
            to_y(d.median),
            HEIGHT - 16.0,
            escape(name)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
