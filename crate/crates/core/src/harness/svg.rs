//! Minimal self-contained SVG line plots.

use std::fmt::Write;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw markers only.
    pub markers: bool,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log: bool,
    pub series: Vec<Series>,
    pub note: Option<String>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn render(&self) -> String {
        let tx = |v: f64| if self.log { v.log10() } else { v };
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter(|p| !self.log || (p.0 > 0.0 && p.1 > 0.0))
                    .map(|&(x, y)| (tx(x), tx(y)))
                    .filter(|p| p.0.is_finite() && p.1.is_finite())
                    .collect()
            })
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            let pad = if y0 == 0.0 { 1.0 } else { 0.05 * y0.abs() };
            y0 -= pad;
            y1 += pad;
        }
        let (pw, ph) = (W - M.0 - M.1, H - M.2 - M.3);
        let sx = |x: f64| M.0 + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| M.2 + (y1 - y) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
            M.0, M.2
        );
        let tick = |v: f64| {
            if self.log {
                format!("1e{v:.2}")
            } else {
                format!("{v:.3e}")
            }
        };
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                sx(xv),
                H - M.3 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                M.0 - 4.0,
                sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            M.0 + pw / 2.0,
            H - 8.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            M.2 + ph / 2.0,
            M.2 + ph / 2.0,
            escape(&self.y_label)
        );
        for (n, (s, p)) in self.series.iter().zip(&pts).enumerate() {
            let c = COLOURS[n % COLOURS.len()];
            if s.markers {
                for &(x, y) in p {
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{c}"/>"#, sx(x), sy(y));
                }
            } else if !p.is_empty() {
                let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
            }
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{c}">{}</text>"#,
                M.0 + 8.0,
                M.2 + 16.0 + 14.0 * n as f64,
                escape(&s.label)
            );
        }
        if let Some(note) = &self.note {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                W - M.1 - 8.0,
                H - M.3 - 8.0,
                escape(note)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
