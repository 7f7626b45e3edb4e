//! Minimal SVG rendering for quick looks at the CSV data.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series<'a> {
    pub label: String,
    pub points: &'a [(f64, f64)],
}

#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            let pad = 0.5 * hi.abs().max(1e-9);
            (lo, hi) = (lo - pad, hi + pad);
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, frac: f64) -> String {
        let v = self.lo + frac * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.4}")
        }
    }
}

fn px(x: &Axis, v: f64) -> f64 {
    MARGIN + x.frac(v) * (WIDTH - 2.0 * MARGIN)
}

fn py(y: &Axis, v: f64) -> f64 {
    HEIGHT - MARGIN - y.frac(v) * (HEIGHT - 2.0 * MARGIN)
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, x: &Axis, y: &Axis) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let gx = MARGIN + f * (WIDTH - 2.0 * MARGIN);
        let gy = HEIGHT - MARGIN - f * (HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(
            out,
            r#"<text x="{gx}" y="{}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN + 15.0,
            x.label(f)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{gy}" text-anchor="end">{}</text>"#,
            MARGIN - 5.0,
            y.label(f)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line chart of several series sharing the axes.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_x: bool,
) -> String {
    let x = Axis::fit(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.0)),
        log_x,
    );
    let y = Axis::fit(
        series.iter().flat_map(|s| s.points.iter().map(|p| p.1)),
        false,
    );
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, &x, &y);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        // thin long series so the file stays small
        let stride = (s.points.len() / 2000).max(1);
        let path: Vec<String> = s
            .points
            .iter()
            .step_by(stride)
            .filter(|(a, b)| a.is_finite() && b.is_finite() && (!log_x || *a > 0.0))
            .map(|&(a, b)| format!("{:.2},{:.2}", px(&x, a), py(&y, b)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 5.0,
            MARGIN + 12.0 * (k as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Filled feasible polygon in the `(k_p, k_v)` plane with an optional
/// marked gain pair.
pub fn region_chart(
    title: &str,
    bounds: ((f64, f64), (f64, f64)),
    polygon: &[(f64, f64)],
    mark: Option<(f64, f64)>,
) -> String {
    let x = Axis::fit([bounds.0 .0, bounds.0 .1].into_iter(), false);
    let y = Axis::fit([bounds.1 .0, bounds.1 .1].into_iter(), false);
    let mut out = String::new();
    frame(&mut out, title, "k_p", "k_v", &x, &y);
    if !polygon.is_empty() {
        let pts: Vec<String> = polygon
            .iter()
            .map(|&(a, b)| format!("{:.2},{:.2}", px(&x, a), py(&y, b)))
            .collect();
        let _ = writeln!(
            out,
            r##"<polygon points="{}" fill="#9ecae1" stroke="#1f77b4"/>"##,
            pts.join(" ")
        );
    }
    if let Some((a, b)) = mark {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#d62728"/>"##,
            px(&x, a),
            py(&y, b)
        );
    }
    out.push_str("</svg>\n");
    out
}
