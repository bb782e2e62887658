//! Static SVG figures. Coordinates are printed with fixed precision so equal
//! inputs give byte-identical files.

use std::fmt::Write;

use crate::bifiltration::{BifiltrationSummary, Significance};
use crate::fields::ScalarField;
use crate::geometry::PointCloud;
use crate::persistence::{PersistenceDiagram, INFINITY_LINE};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0}" height="{H:.0}" viewBox="0 0 {W:.0} {H:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{l:.1} {t:.1} L{l:.1} {b:.1} L{r:.1} {b:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let x = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let y = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(x),
            b + 16.0,
            tick(x)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 6.0,
            f.py(y) + 4.0,
            tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 18.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn hline(out: &mut String, f: &Frame, y: f64, stroke: &str, dash: &str, label: &str) {
    let py = f.py(y);
    let _ = writeln!(
        out,
        r#"<line x1="{:.1}" y1="{py:.2}" x2="{:.1}" y2="{py:.2}" stroke="{stroke}" stroke-dasharray="{dash}"/>"#,
        MARGIN,
        W - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.2}" text-anchor="end" fill="{stroke}">{}</text>"#,
        W - MARGIN - 2.0,
        py - 4.0,
        escape(label)
    );
}

fn marker(out: &mut String, class: Significance, x: f64, y: f64) {
    const S: f64 = 5.0;
    match class {
        Significance::Noise => {
            let _ = writeln!(
                out,
                r#"<path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke="red" stroke-width="1.5"/>"#,
                x - S,
                y - S,
                x + S,
                y + S,
                x - S,
                y + S,
                x + S,
                y - S
            );
        }
        Significance::Weak => {
            let _ = writeln!(
                out,
                r#"<path d="M{x:.2} {:.2} L{:.2} {y:.2} L{x:.2} {:.2} L{:.2} {y:.2} Z" fill="gold" stroke="black" stroke-width="0.5"/>"#,
                y - S,
                x + S,
                y + S,
                x - S
            );
        }
        Significance::Robust => {
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{S:.1}" fill="red"/>"#);
        }
        Significance::Loop => {
            let _ = writeln!(
                out,
                r#"<path d="M{x:.2} {:.2} L{:.2} {:.2} L{:.2} {:.2} Z" fill="blue"/>"#,
                y - S,
                x + S,
                y + S,
                x - S,
                y + S
            );
        }
    }
}

/// Percentile on x, lifespan on y, one mark per reported feature.
/// Immortal features sit on the dashed line labeled `inf`.
pub fn summary_svg(summary: &BifiltrationSummary) -> String {
    let inf_y = INFINITY_LINE * summary.max_edge;
    let x_max = summary.rows.iter().map(|r| r.percentile).fold(0.0, f64::max);
    let f = Frame::new(0.0, x_max + 5.0, 0.0, inf_y * 1.05);
    let mut out = String::new();
    header(&mut out, &format!("Bifiltration summary ({})", summary.filter));
    axes(&mut out, &f, "percentile threshold", "lifespan");
    hline(&mut out, &f, inf_y, "gray", "6 3", "inf");
    hline(&mut out, &f, summary.noise_threshold, "black", "6 3", "noise threshold");
    hline(&mut out, &f, summary.min_pers, "green", "2 2", "min_pers");
    for row in &summary.rows {
        for feat in &row.features {
            let y = if feat.lifespan.is_finite() { feat.lifespan } else { inf_y };
            // loops drawn slightly right of components at the same percentile
            let dx = if feat.dim == 1 { 1.0 } else { -1.0 };
            marker(&mut out, feat.class, f.px(row.percentile + dx), f.py(y));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Birth against death; components as red circles, loops as blue triangles.
pub fn diagram_svg(diagram: &PersistenceDiagram, title: &str) -> String {
    let inf_y = INFINITY_LINE * diagram.max_edge;
    let f = Frame::new(0.0, inf_y * 1.05, 0.0, inf_y * 1.05);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, "birth", "death");
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray"/>"#,
        f.px(0.0),
        f.py(0.0),
        f.px(f.x1),
        f.py(f.y1)
    );
    hline(&mut out, &f, inf_y, "gray", "6 3", "inf");
    for feat in &diagram.features {
        let (x, y) = (f.px(feat.birth), f.py(feat.export_death(diagram.max_edge)));
        let class = if feat.dim == 0 { Significance::Robust } else { Significance::Loop };
        marker(&mut out, class, x, y);
    }
    out.push_str("</svg>\n");
    out
}

fn ramp(t: f64) -> (u8, u8, u8) {
    // dark blue -> teal -> yellow
    const STOPS: [(f64, f64, f64); 3] = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 } * 2.0;
    let i = (t.floor() as usize).min(1);
    let u = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Scatter of two coordinates, colored by `field` when given.
pub fn cloud_svg(cloud: &PointCloud, field: Option<&ScalarField>, axes_pair: (usize, usize), title: &str) -> String {
    let (a, b) = axes_pair;
    let mut bx = (f64::INFINITY, f64::NEG_INFINITY);
    let mut by = (f64::INFINITY, f64::NEG_INFINITY);
    for p in cloud.points() {
        bx = (bx.0.min(p[a]), bx.1.max(p[a]));
        by = (by.0.min(p[b]), by.1.max(p[b]));
    }
    let f = Frame::new(bx.0, bx.1, by.0, by.1);
    let (lo, hi) = field
        .map(|s| s.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v))))
        .unwrap_or((0.0, 1.0));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, &format!("x{a}"), &format!("x{b}"));
    // low values first so dense regions are drawn on top
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    if let Some(s) = field {
        order.sort_by(|&i, &j| s.values[i].total_cmp(&s.values[j]).then(i.cmp(&j)));
    }
    for i in order {
        let p = cloud.point(i);
        let t = field.map_or(0.0, |s| if hi > lo { (s.values[i] - lo) / (hi - lo) } else { 1.0 });
        let (r, g, bl) = ramp(t);
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="1.2" fill="#{r:02x}{g:02x}{bl:02x}"/>"##,
            f.px(p[a]),
            f.py(p[b])
        );
    }
    out.push_str("</svg>\n");
    out
}
