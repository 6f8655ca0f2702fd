//! Minimal SVG plots written by hand.

use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 480.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / span(self.x0, self.x1) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / span(self.y0, self.y1) * (H - 2.0 * PAD)
    }
}

fn span(a: f64, b: f64) -> f64 {
    if b > a {
        b - a
    } else {
        1.0
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, f: &Frame) {
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (x, y, anchor, label) in [
        (PAD, H - PAD + 14.0, "start", f.x0),
        (W - PAD, H - PAD + 14.0, "end", f.x1),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" font-size="10" text-anchor="{anchor}">{label:.3}</text>"#);
    }
    for (y, label) in [(H - PAD, f.y0), (PAD + 8.0, f.y1)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" font-size="10" text-anchor="end">{label:.3}</text>"#,
            PAD - 4.0
        );
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Circles with area proportional to `weight`.
pub fn scatter(title: &str, points: &[(f64, f64, f64)], extent: (f64, f64)) -> String {
    let f = Frame {
        x0: extent.0,
        x1: extent.1,
        y0: extent.0,
        y1: extent.1,
    };
    let mut s = open(title);
    axes(&mut s, &f);
    let max_w = points.iter().map(|p| p.2).fold(0.0, f64::max);
    for &(x, y, w) in points {
        let r = if max_w > 0.0 { 1.0 + 8.0 * (w / max_w).sqrt() } else { 1.0 };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="{}" fill-opacity="0.5"/>"#,
            f.px(x),
            f.py(y),
            COLORS[0]
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Bars over `(lo, hi, count)` bins with an optional vertical marker.
pub fn histogram(title: &str, bins: &[(f64, f64, f64)], marker: Option<f64>) -> String {
    let x0 = bins.first().map_or(0.0, |b| b.0);
    let mut x1 = bins.last().map_or(1.0, |b| b.1);
    if let Some(m) = marker {
        x1 = x1.max(m);
    }
    let top = bins.iter().map(|b| b.2).fold(0.0, f64::max);
    let f = Frame { x0, x1, y0: 0.0, y1: top };
    let mut s = open(title);
    axes(&mut s, &f);
    for &(lo, hi, c) in bins {
        let (x, y) = (f.px(lo), f.py(c));
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            (f.px(hi) - x).max(0.5),
            f.py(0.0) - y,
            COLORS[0]
        );
    }
    if let Some(m) = marker {
        let x = f.px(m);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="{}" stroke-dasharray="4 3"/>"#,
            H - PAD,
            COLORS[1]
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One polyline per named series.
pub fn lines(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let pts = || series.iter().flat_map(|(_, p)| p.iter());
    let f = Frame {
        x0: pts().map(|p| p.0).fold(f64::INFINITY, f64::min).min(0.0),
        x1: pts().map(|p| p.0).fold(0.0, f64::max),
        y0: 0.0,
        y1: pts().map(|p| p.1).fold(0.0, f64::max),
    };
    let mut s = open(title);
    axes(&mut s, &f);
    for (i, (name, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            PAD + 8.0,
            PAD + 16.0 + 14.0 * i as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grid of cells (`true` = wall) with a dot per weighted cell.
pub fn maze_overlay(title: &str, size: usize, walls: &[bool], weights: &[(usize, f64)]) -> String {
    let mut s = open(title);
    let cell = (W - 2.0 * PAD) / size as f64;
    for (i, &wall) in walls.iter().enumerate() {
        let (r, c) = (i / size, i % size);
        let fill = if wall { "#333" } else { "#eee" };
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{fill}"/>"#,
            PAD + c as f64 * cell,
            PAD + r as f64 * cell
        );
    }
    let max_w = weights.iter().map(|w| w.1).fold(0.0, f64::max);
    for &(i, w) in weights {
        let (r, c) = (i / size, i % size);
        let rad = if max_w > 0.0 { 0.45 * cell * (w / max_w).sqrt() } else { 0.0 };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{}" fill-opacity="0.7"/>"#,
            PAD + (c as f64 + 0.5) * cell,
            PAD + (r as f64 + 0.5) * cell,
            rad.max(0.8),
            COLORS[1]
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_are_closed() {
        let docs = [
            scatter("a<b", &[(1.0, 2.0, 3.0)], (0.0, 10.0)),
            histogram("h", &[(0.0, 1.0, 2.0), (1.0, 2.0, 5.0)], Some(1.5)),
            lines("l", &[("s".into(), vec![(0.0, 1.0), (2.0, 3.0)])]),
            maze_overlay("m", 2, &[true, false, false, true], &[(1, 1.0)]),
        ];
        for d in docs {
            assert!(d.starts_with("<svg"));
            assert!(d.trim_end().ends_with("</svg>"));
            assert!(!d.contains("NaN"));
        }
        assert!(scatter("a<b", &[], (0.0, 1.0)).contains("a&lt;b"));
    }
}
