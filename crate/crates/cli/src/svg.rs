//! Minimal SVG plots of the energy history and curve snapshots.

use std::fmt::Write;

use willmore::harness::{RunRecord, Snapshot};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn bounds(points: impl Iterator<Item = (f64, f64)>) -> (f64, f64, f64, f64) {
    points.fold(
        (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ),
        |(x0, x1, y0, y1), (x, y)| (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
    )
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = lo.abs().max(1.0) * 1e-3;
        (lo - pad, hi + pad)
    }
}

fn header(out: &mut String) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
}

/// Energy against time.
pub fn energy_plot(record: &RunRecord) -> String {
    let pts: Vec<(f64, f64)> = record.rows.iter().map(|r| (r.t, r.energy)).collect();
    let (t0, t1, e0, e1) = bounds(pts.iter().copied());
    let (t0, t1) = widen(t0, t1);
    let (e0, e1) = widen(e0, e1);
    let sx = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let sy = |e: f64| HEIGHT - MARGIN - (e - e0) / (e1 - e0) * (HEIGHT - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out);
    writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    )
    .unwrap();
    // long runs: at most ~2000 plotted points
    let stride = (pts.len() / 2000).max(1);
    let poly: Vec<String> = pts
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == pts.len() - 1)
        .map(|(_, &(t, e))| format!("{:.2},{:.2}", sx(t), sy(e)))
        .collect();
    writeln!(
        out,
        r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
        COLORS[0],
        poly.join(" ")
    )
    .unwrap();
    for (x, y, anchor, text) in [
        (
            MARGIN,
            HEIGHT - MARGIN + 18.0,
            "start",
            format!("t = {t0:.3}"),
        ),
        (
            WIDTH - MARGIN,
            HEIGHT - MARGIN + 18.0,
            "end",
            format!("t = {t1:.3}"),
        ),
        (MARGIN - 6.0, HEIGHT - MARGIN, "end", format!("{e0:.4}")),
        (MARGIN - 6.0, MARGIN + 4.0, "end", format!("{e1:.4}")),
        (
            WIDTH / 2.0,
            MARGIN - 16.0,
            "middle",
            format!("energy, {}", record.experiment.name),
        ),
    ] {
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{y:.1}" font-size="12" font-family="sans-serif" text-anchor="{anchor}">{text}</text>"#
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Snapshot polygons overlaid with equal-aspect axes.
pub fn curves_plot(snapshots: &[Snapshot]) -> String {
    let (x0, x1, y0, y1) = bounds(
        snapshots
            .iter()
            .flat_map(|s| s.curve.vertices().iter().map(|v| (v.x, v.y))),
    );
    let (x0, x1) = widen(x0, x1);
    let (y0, y1) = widen(y0, y1);
    let scale = ((WIDTH - 2.0 * MARGIN) / (x1 - x0)).min((HEIGHT - 2.0 * MARGIN) / (y1 - y0));
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    let sx = |x: f64| WIDTH / 2.0 + (x - cx) * scale;
    let sy = |y: f64| HEIGHT / 2.0 - (y - cy) * scale;
    let mut out = String::new();
    header(&mut out);
    for (k, s) in snapshots.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .curve
            .vertices()
            .iter()
            .map(|v| format!("{:.2},{:.2}", sx(v.x), sy(v.y)))
            .collect();
        writeln!(
            out,
            r#"<polygon fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#,
            pts.join(" ")
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="10" y="{}" font-size="12" font-family="sans-serif" fill="{color}">t = {}</text>"#,
            16 + 14 * k,
            crate::output::time_label(s.t)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
