//! Minimal SVG charts for run reports.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 360.0;
const PAD_L: f64 = 64.0;
const PAD_R: f64 = 16.0;
const PAD_T: f64 = 32.0;
const PAD_B: f64 = 40.0;
const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        let m = 0.05 * (y1 - y0);
        Self {
            x0,
            x1,
            y0: y0 - m,
            y1: y1 + m,
        }
    }

    fn px(&self, x: f64) -> f64 {
        PAD_L + (x - self.x0) / (self.x1 - self.x0) * (W - PAD_L - PAD_R)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD_B - (y - self.y0) / (self.y1 - self.y0) * (H - PAD_T - PAD_B)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str, f: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, esc(title));
    let (l, r, t, b) = (PAD_L, W - PAD_R, PAD_T, H - PAD_B);
    let _ = writeln!(s, r#"<path d="M{l},{t} L{l},{b} L{r},{b}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let y = f.py(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="black"/>"#, l - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, y + 4.0, tick(v));
        let xv = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let x = f.px(xv);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{}" stroke="black"/>"#, b + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, b + 16.0, tick(xv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 6.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        (t + b) / 2.0,
        (t + b) / 2.0,
        esc(ylabel)
    );
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, n) in names.iter().enumerate() {
        let y = PAD_T + 6.0 + 14.0 * i as f64;
        let x = W - PAD_R - 150.0;
        let c = COLOURS[i % COLOURS.len()];
        let _ = writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{c}" stroke-width="2"/>"#, x + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 24.0, y + 4.0, esc(n));
    }
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let f = Frame::fit(series.iter().flat_map(|s| s.points.iter().copied()));
    let mut s = open(title, xlabel, ylabel, &f);
    for (i, ser) in series.iter().enumerate() {
        let mut d = String::new();
        for (k, &(x, y)) in ser.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.1},{:.1} ", if k == 0 { "M" } else { "L" }, f.px(x), f.py(y));
        }
        let c = COLOURS[i % COLOURS.len()];
        let _ = writeln!(s, r#"<path d="{}" stroke="{c}" fill="none" stroke-width="1"/>"#, d.trim_end());
    }
    legend(&mut s, &series.iter().map(|s| s.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Bars at integer positions with an optional overlaid curve.
pub fn bar_chart(title: &str, xlabel: &str, ylabel: &str, bars: &[(f64, f64)], curve: Option<Series>) -> String {
    let pts = bars
        .iter()
        .flat_map(|&(x, y)| [(x - 0.5, 0.0), (x + 0.5, y)])
        .chain(curve.iter().flat_map(|c| c.points.iter().copied()));
    let f = Frame::fit(pts);
    let mut s = open(title, xlabel, ylabel, &f);
    for &(x, y) in bars {
        let (l, r) = (f.px(x - 0.4), f.px(x + 0.4));
        let (top, base) = (f.py(y), f.py(0.0));
        let _ = writeln!(
            s,
            r#"<rect x="{l:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
            (r - l).max(0.5),
            (base - top).max(0.0),
            COLOURS[0]
        );
    }
    if let Some(c) = curve {
        let mut d = String::new();
        for (k, &(x, y)) in c.points.iter().enumerate() {
            let _ = write!(d, "{}{:.1},{:.1} ", if k == 0 { "M" } else { "L" }, f.px(x), f.py(y));
        }
        let _ = writeln!(s, r#"<path d="{}" stroke="{}" fill="none" stroke-width="2"/>"#, d.trim_end(), COLOURS[1]);
        legend(&mut s, &["counts", c.name]);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let s = line_chart(
            "t",
            "x",
            "y",
            &[Series {
                name: "a<b",
                points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)],
            }],
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a&lt;b"));
        assert!(!s.contains("NaN"));
        let b = bar_chart("h", "x", "y", &[(1.0, 3.0), (2.0, 0.0)], None);
        assert_eq!(b.matches("<rect").count(), 3);
    }
}
