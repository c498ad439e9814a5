//! Static SVG convergence charts with a logarithmic x axis.

use std::fmt::Write;

/// One plotted point with its interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<Point>,
    /// Dashed horizontal line.
    pub asymptote: Option<(f64, String)>,
    pub annotation: Option<String>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.4}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Chart {
    /// Renders the chart. Output depends only on the chart contents.
    pub fn render(&self) -> String {
        let pts: Vec<Point> = self.points.iter().copied().filter(|p| p.x > 0.0 && p.y.is_finite()).collect();

        let (mut lx0, mut lx1) = pts
            .iter()
            .map(|p| p.x.log10())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lx0.is_finite() {
            (lx0, lx1) = (0.0, 1.0);
        }
        if lx1 - lx0 < 1e-9 {
            lx0 -= 0.5;
            lx1 += 0.5;
        }
        lx0 = lx0.floor();
        lx1 = lx1.ceil();

        let mut ys: Vec<f64> = pts.iter().flat_map(|p| [p.lo, p.hi, p.y]).filter(|v| v.is_finite()).collect();
        if let Some((a, _)) = &self.asymptote {
            ys.push(*a);
        }
        let (mut y0, mut y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        let pad = if y1 > y0 { 0.08 * (y1 - y0) } else { 0.1 * y0.abs().max(1e-3) };
        y0 -= pad;
        y1 += pad;

        let px = |x: f64| LEFT + (x.log10() - lx0) / (lx1 - lx0) * (W - LEFT - RIGHT);
        let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="28" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        );

        // axes and decade ticks
        let (ax0, ax1, ay0, ay1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
        let _ = writeln!(s, r#"<line x1="{ax0:.1}" y1="{ay1:.1}" x2="{ax1:.1}" y2="{ay1:.1}"/>"#);
        let _ = writeln!(s, r#"<line x1="{ax0:.1}" y1="{ay0:.1}" x2="{ax0:.1}" y2="{ay1:.1}"/>"#);
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
        let mut d = lx0 as i32;
        while d as f64 <= lx1 {
            let x = px(10f64.powi(d));
            let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{ay1:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, ay1 + 5.0);
            let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#, ay1 + 18.0);
            d += 1;
        }
        for k in 0..=4 {
            let v = y0 + (y1 - y0) * k as f64 / 4.0;
            let y = py(v);
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{ax0:.1}" y2="{y:.1}" stroke="black"/>"#, ax0 - 5.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, ax0 - 8.0, y + 4.0, fmt_tick(v));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (ax0 + ax1) / 2.0,
            H - 15.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            (ay0 + ay1) / 2.0,
            (ay0 + ay1) / 2.0,
            esc(&self.y_label)
        );
        let _ = writeln!(s, "</g>");

        // interval band
        if pts.len() > 1 {
            let mut band = String::new();
            for p in &pts {
                let _ = write!(band, "{:.2},{:.2} ", px(p.x), py(p.hi));
            }
            for p in pts.iter().rev() {
                let _ = write!(band, "{:.2},{:.2} ", px(p.x), py(p.lo));
            }
            let _ = writeln!(s, r#"<polygon points="{}" fill="steelblue" fill-opacity="0.2" stroke="none"/>"#, band.trim_end());
            let mut line = String::new();
            for p in &pts {
                let _ = write!(line, "{:.2},{:.2} ", px(p.x), py(p.y));
            }
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, line.trim_end());
        }
        for p in &pts {
            let (x, lo, hi) = (px(p.x), py(p.lo), py(p.hi));
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="steelblue"/>"#);
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{:.2}" r="3.5" fill="steelblue"/>"#, py(p.y));
        }

        if let Some((a, label)) = &self.asymptote {
            let y = py(*a);
            let _ = writeln!(
                s,
                r#"<line x1="{ax0:.1}" y1="{y:.2}" x2="{ax1:.1}" y2="{y:.2}" stroke="firebrick" stroke-width="1.5" stroke-dasharray="6,4"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.2}" font-family="sans-serif" font-size="11" fill="firebrick" text-anchor="end">{}</text>"#,
                ax1 - 4.0,
                y - 5.0,
                esc(label)
            );
        }
        if let Some(note) = &self.annotation {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" font-weight="bold">{}</text>"#,
                ax0 + 10.0,
                ay0 + 16.0,
                esc(note)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}
