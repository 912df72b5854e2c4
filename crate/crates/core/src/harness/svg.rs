//! Minimal standalone SVG line and scatter plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesStyle {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: SeriesStyle,
    /// Drawn faintly and left out of the legend.
    pub background: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: SeriesStyle) -> Self {
        Self {
            label: label.into(),
            points,
            style,
            background: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

impl Figure {
    fn tx(&self, x: f64) -> Option<f64> {
        let v = if self.log_x { (x > 0.0).then(|| x.log10())? } else { x };
        v.is_finite().then_some(v)
    }

    fn ty(&self, y: f64) -> Option<f64> {
        let v = if self.log_y { (y > 0.0).then(|| y.log10())? } else { y };
        v.is_finite().then_some(v)
    }

    fn bounds(&self) -> Option<[f64; 4]> {
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for s in &self.series {
            for &(x, y) in &s.points {
                if let (Some(x), Some(y)) = (self.tx(x), self.ty(y)) {
                    b = [b[0].min(x), b[1].max(x), b[2].min(y), b[3].max(y)];
                }
            }
        }
        if !b[0].is_finite() {
            return None;
        }
        for (lo, hi) in [(0, 1), (2, 3)] {
            if b[hi] - b[lo] < 1e-12 {
                b[lo] -= 0.5;
                b[hi] += 0.5;
            }
        }
        Some(b)
    }

    fn ticks(&self, lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
        if log {
            let (a, b) = (lo.ceil() as i32, hi.floor() as i32);
            if b >= a {
                let step = ((b - a) / 6 + 1) as usize;
                return (a..=b).step_by(step).map(|e| (e as f64, fmt_tick(10f64.powi(e)))).collect();
            }
        }
        linear_ticks(lo, hi)
            .into_iter()
            .map(|t| (t, if log { fmt_tick(10f64.powf(t)) } else { fmt_tick(t) }))
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            escape(&self.title)
        );
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let Some([x0, x1, y0, y1]) = self.bounds() else {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#,
                LEFT + pw / 2.0,
                TOP + ph / 2.0
            );
            out.push_str("</svg>\n");
            return out;
        };
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
        for (t, label) in self.ticks(x0, x1, self.log_x) {
            let x = px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        for (t, label) in self.ticks(y0, y1, self.log_y) {
            let y = py(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        let mut legend = 0;
        for (j, s) in self.series.iter().enumerate() {
            let color = if s.background { "#999999" } else { PALETTE[j % PALETTE.len()] };
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(self.tx(x)?), py(self.ty(y)?))))
                .collect();
            let opacity = if s.background { 0.35 } else { 1.0 };
            match s.style {
                SeriesStyle::Markers => {
                    for (x, y) in &pts {
                        let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}" fill-opacity="{opacity}"/>"#);
                    }
                }
                SeriesStyle::Line | SeriesStyle::Dashed => {
                    let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                    let dash = if s.style == SeriesStyle::Dashed { r#" stroke-dasharray="6,4""# } else { "" };
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-opacity="{opacity}" stroke-width="1.5"{dash}/>"#,
                        path.join(" ")
                    );
                }
            }
            if !s.background {
                let ly = TOP + 10.0 + 18.0 * legend as f64;
                let lx = WIDTH - RIGHT + 12.0;
                let _ = writeln!(
                    out,
                    r#"<rect x="{lx}" y="{:.1}" width="12" height="3" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                    ly - 4.0,
                    lx + 18.0,
                    ly,
                    escape(&s.label)
                );
                legend += 1;
            }
        }
        out.push_str("</svg>\n");
        out
    }
}
