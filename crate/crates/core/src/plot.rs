//! Minimal SVG output: a polygon drawing and a line chart.

use std::fmt::Write;

use crate::geometry::ConvexPolygon;

const SIZE: f64 = 480.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// The polygon scaled to fit, with a caption.
pub fn polygon_svg(poly: &ConvexPolygon, caption: &str) -> String {
    let vs = poly.vertices();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for v in vs {
        x0 = x0.min(v.x);
        x1 = x1.max(v.x);
        y0 = y0.min(v.y);
        y1 = y1.max(v.y);
    }
    let s = (SIZE - 2.0 * PAD) / (x1 - x0).max(y1 - y0);
    let points: Vec<String> = vs
        .iter()
        .map(|v| format!("{:.3},{:.3}", PAD + (v.x - x0) * s, SIZE - PAD - (v.y - y0) * s))
        .collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <polygon points=\"{}\" fill=\"#c6dbef\" stroke=\"#08306b\" stroke-width=\"1.5\"/>\n\
         <text x=\"{PAD}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n</svg>\n",
        points.join(" "),
        PAD / 2.0,
        escape(caption)
    )
}

/// A named series of `(x, y)` points.
pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with linear axes, or a logarithmic x axis.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|(x, y)| tx(*x).is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 * y1.abs().max(1.0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (w, h) = (SIZE * 1.5, SIZE);
    let px = |x: f64| PAD + (tx(x) - x0) / (x1 - x0) * (w - 2.0 * PAD);
    let py = |y: f64| h - PAD - (y - y0) / (y1 - y0) * (h - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<path d=\"M{PAD},{PAD} V{} H{}\" fill=\"none\" stroke=\"black\"/>",
        h - PAD,
        w - PAD
    );
    for (i, y) in [y0, 0.5 * (y0 + y1), y1].iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"4\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            py(*y) + if i == 2 { 10.0 } else { 0.0 },
            short(*y)
        );
    }
    for x in [x0, x1] {
        let shown = if log_x { 10f64.powf(x) } else { x };
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            PAD + (x - x0) / (x1 - x0) * (w - 2.0 * PAD) - 10.0,
            h - PAD + 16.0,
            short(shown)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}{}</text>",
        w / 2.0 - 40.0,
        h - 8.0,
        escape(x_label),
        if log_x { " (log)" } else { "" }
    );
    let _ = writeln!(
        out,
        "<text x=\"{PAD}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"14\">{}: {}</text>",
        PAD / 2.0,
        escape(title),
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| tx(*x).is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
            for p in &pts {
                let (x, y) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(out, "<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{color}\"/>");
            }
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>",
            w - PAD - 140.0,
            PAD + 14.0 * (k as f64 + 1.0),
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn short(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}
