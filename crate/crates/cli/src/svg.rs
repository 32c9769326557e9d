//! Minimal SVG line plots: one panel per series, stacked vertically.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const PANEL: f64 = 120.0;
const MARGIN: f64 = 24.0;

pub struct Series<'a> {
    pub label: String,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

pub fn line_panels(title: &str, series: &[Series<'_>]) -> String {
    let height = MARGIN + series.len() as f64 * (PANEL + MARGIN);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    let _ = writeln!(s, "<text x=\"{MARGIN}\" y=\"16\">{}</text>", escape(title));
    for (k, ser) in series.iter().enumerate() {
        let top = MARGIN + k as f64 * (PANEL + MARGIN);
        let (x0, x1) = range(ser.x);
        let (y0, y1) = range(ser.y);
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| top + 14.0 + (1.0 - (y - y0) / (y1 - y0)) * (PANEL - 14.0);
        let _ = writeln!(
            s,
            "<text x=\"{MARGIN}\" y=\"{:.1}\">{} [{y0:.3e}, {y1:.3e}]</text>",
            top + 10.0,
            escape(&ser.label)
        );
        let pts: Vec<String> =
            ser.x.iter().zip(ser.y).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"{}\"/>", pts.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

fn range(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, lo + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
