//! Minimal self-contained SVG line chart with a logarithmic y axis.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// One polyline per named series of `(k, value)`. Non-positive values are
/// dropped since they have no logarithm.
pub fn line_chart(lines: &[(String, Vec<(usize, f64)>)]) -> String {
    let points = lines
        .iter()
        .flat_map(|(_, pts)| pts.iter())
        .filter(|p| p.1 > 0.0 && p.1.is_finite());
    let (mut k_max, mut lo, mut hi) = (1usize, f64::INFINITY, f64::NEG_INFINITY);
    for &(k, v) in points {
        k_max = k_max.max(k);
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
    let x = |k: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * k as f64 / k_max as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v.log10() - lo) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" fill="none" stroke="black"/>"#
    );
    let step = ((hi - lo) / 8.0).ceil().max(1.0);
    let mut e = lo;
    while e <= hi {
        let ty = y(10f64.powf(e));
        let _ = writeln!(
            out,
            r##"<line x1="{left}" y1="{ty:.2}" x2="{right}" y2="{ty:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            left - 6.0,
            ty + 4.0
        );
        e += step;
    }
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="{:.2}">0</text><text x="{right}" y="{:.2}" text-anchor="end">{k_max}</text>"#,
        bottom + 18.0,
        bottom + 18.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">k</text>"#,
        (left + right) / 2.0,
        bottom + 36.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="{:.2}">residual (log scale)</text>"#,
        top - 20.0
    );
    for (idx, (name, pts)) in lines.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let path = pts
            .iter()
            .filter(|p| p.1 > 0.0 && p.1.is_finite())
            .map(|&(k, v)| format!("{:.2},{:.2}", x(k), y(v)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            out,
            r#"<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
        );
        let ly = top + 16.0 * idx as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            right - 110.0,
            right - 90.0,
            right - 84.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
