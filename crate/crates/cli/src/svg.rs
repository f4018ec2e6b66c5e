//! Minimal self-contained SVG plots.

use std::fmt::Write as _;

use cvrep_core::network::{Baseline, PlacementSweepResult};

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#7f7f7f", "#9467bd", "#ff7f0e"];

fn open(header: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    // The run header, as an XML comment ("--" is not allowed inside one).
    let _ = writeln!(s, "<!--\n{}-->", header.replace("--", "- -"));
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    s
}

/// Log-scale rate vs distance, one polyline per series.
pub fn rate_plot(series: &[(String, Vec<(f64, f64, f64)>)], header: &str) -> String {
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x_hi, mut y_lo, mut y_hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(d, r, _) in pts {
        x_hi = x_hi.max(d);
        if r > 0.0 && r < 1e5 {
            y_lo = y_lo.min(r.log10());
            y_hi = y_hi.max(r.log10());
        }
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (-1.0, 0.0);
    }
    let (y_lo, y_hi) = (y_lo.floor(), y_hi.ceil().max(y_lo.floor() + 1.0));
    let x_hi = x_hi.max(1.0);
    let px = |d: f64| PAD + d / x_hi * (W - 2.0 * PAD);
    let py = |r: f64| H - PAD - (r.log10() - y_lo) / (y_hi - y_lo) * (H - 2.0 * PAD);

    let mut s = open(header);
    let _ = writeln!(s, r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * PAD, H - 2.0 * PAD);
    for e in (y_lo as i32)..=(y_hi as i32) {
        let y = py(10f64.powi(e));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{e}</text>"#, PAD - 4.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">distance (km), 0 to {x_hi}</text>"#, W / 2.0, H - PAD / 3.0);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.1 > 0.0 && p.1.log10() >= y_lo && p.1.log10() <= y_hi)
            .map(|p| format!("{:.1},{:.1}", px(p.0), py(p.1)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#, PAD + 8.0, PAD + 14.0 * (k + 1) as f64);
    }
    s.push_str("</svg>\n");
    s
}

/// Diagonal-pair rate over shortest-path capacity across hub positions, on
/// a log color scale centered at 1.
pub fn heatmap(sweep: &PlacementSweepResult, header: &str) -> String {
    let n = sweep.grid_n;
    let cell = (H - 2.0 * PAD) / n as f64;
    let mut s = open(header);
    for (i, c) in sweep.cells.iter().enumerate() {
        let (ix, iy) = (i % n, i / n);
        let p = &c.pairs[4];
        let ratio = p.rate / p.baseline(Baseline::B);
        let t = (ratio.max(1e-3).log10() / 3.0).clamp(-1.0, 1.0);
        let (r, g, b) = if t >= 0.0 {
            (255.0 * (1.0 - t), 255.0 * (1.0 - 0.5 * t), 255.0)
        } else {
            (255.0, 255.0 * (1.0 + t), 255.0 * (1.0 + t))
        };
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({},{},{})"/>"#,
            PAD + ix as f64 * cell,
            H - PAD - (iy + 1) as f64 * cell,
            r as u8,
            g as u8,
            b as u8
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}">side {} km: diagonal pair rate / shortest-path capacity (blue &gt; 1, red &lt; 1)</text>"#,
        PAD - 10.0,
        sweep.side_km
    );
    s.push_str("</svg>\n");
    s
}
