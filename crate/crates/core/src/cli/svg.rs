//! Minimal static line plots. Each series becomes one `<polyline>`.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub filled: bool,
}

#[derive(Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
    /// Draw the `y = 0` axis when it is in range.
    pub zero_line: bool,
}

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 {
            lo.abs() * 0.05
        } else {
            1.0
        };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn panel(out: &mut String, p: &Panel, top: f64) {
    let xs = p
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|q| q.0))
        .chain(p.markers.iter().map(|m| m.x));
    let ys = p
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|q| q.1))
        .chain(p.markers.iter().map(|m| m.y));
    let (x0, x1) = range(xs);
    let (y0, y1) = range(ys);
    let w = WIDTH - MARGIN_L - MARGIN_R;
    let h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * w;
    let py = |y: f64| top + MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * h;

    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_L}" y="{:.2}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##,
        top + MARGIN_T
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_L + w / 2.0,
        top + 20.0,
        escape(&p.title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        MARGIN_L + w / 2.0,
        top + PANEL_H - 8.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" font-size="12" transform="rotate(-90 14 {:.2})" text-anchor="middle">{}</text>"#,
        top + MARGIN_T + h / 2.0,
        top + MARGIN_T + h / 2.0,
        escape(&p.y_label)
    );
    for (v, anchor_x) in [(x0, MARGIN_L), (x1, MARGIN_L + w)] {
        let _ = writeln!(
            out,
            r#"<text x="{anchor_x:.2}" y="{:.2}" text-anchor="middle" font-size="10">{v:.3}</text>"#,
            top + MARGIN_T + h + 14.0
        );
    }
    for (v, y) in [(y0, top + MARGIN_T + h), (y1, top + MARGIN_T + 4.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-size="10">{v:.3}</text>"#,
            MARGIN_L - 4.0
        );
    }
    if p.zero_line && y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_L}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            MARGIN_L + w,
            py(0.0),
            py(0.0)
        );
    }
    for (i, s) in p.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::with_capacity(s.points.len() * 16);
        for &(x, y) in s
            .points
            .iter()
            .filter(|q| q.0.is_finite() && q.1.is_finite())
        {
            let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            pts.trim_end(),
            escape(&s.label)
        );
    }
    for m in &p.markers {
        let fill = if m.filled { "#000" } else { "#fff" };
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{fill}" stroke="#000" stroke-width="1.5"/>"##,
            px(m.x),
            py(m.y)
        );
    }
}

/// Stacks the panels vertically in one document.
pub fn render(panels: &[Panel]) -> String {
    let height = PANEL_H * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (i, p) in panels.iter().enumerate() {
        panel(&mut out, p, i as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}
