//! Minimal standalone SVG line plots.

use crate::error::{CliError, CliResult};
use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round step for about `n` intervals over `span`.
fn nice_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

pub fn render(plot: &Plot) -> CliResult<String> {
    let series: Vec<Series> = plot
        .series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s
                .points
                .iter()
                .copied()
                .filter(|&(x, y)| x.is_finite() && y.is_finite() && (!plot.log_y || y > 0.0))
                .map(|(x, y)| (x, if plot.log_y { y.log10() } else { y }))
                .collect(),
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    if series.is_empty() {
        return Err(CliError::Validation("nothing to plot: no finite data points".into()));
    }
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (y_ticks, y0, y1) = if plot.log_y {
        let (lo, hi) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
        let ticks: Vec<f64> = (lo as i32..=hi as i32).map(f64::from).collect();
        (ticks, lo, hi)
    } else {
        if y1 == y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let step = nice_step(y1 - y0, 6.0);
        let (lo, hi) = ((y0 / step).floor() * step, (y1 / step).ceil() * step);
        let n = ((hi - lo) / step).round() as i32;
        ((0..=n).map(|i| lo + i as f64 * step).collect(), lo, hi)
    };
    let x_step = nice_step(x1 - x0, 8.0);
    let x_ticks: Vec<f64> = {
        let first = (x0 / x_step).ceil() as i64;
        let last = (x1 / x_step).floor() as i64;
        (first..=last).map(|i| i as f64 * x_step).collect()
    };

    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, esc(&plot.title));
    for &t in &y_ticks {
        let y = sy(t);
        let label = if plot.log_y { format!("1e{}", t as i32) } else { fmt_tick(t) };
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
    }
    for &t in &x_ticks {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 18.0, esc(&plot.x_label));
    let _ = writeln!(
        s,
        r#"<text transform="translate(20 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + ph / 2.0,
        esc(&plot.y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, esc(&ser.label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plot(log_y: bool, pts: Vec<(f64, f64)>) -> Plot {
        Plot {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y,
            series: vec![Series { label: "a<b".into(), points: pts }],
        }
    }

    #[test]
    fn log_axis_has_decade_lines() {
        let svg = render(&plot(true, vec![(0.0, 0.5), (10.0, 2e-4)])).unwrap();
        for d in ["1e-4", "1e-3", "1e-2", "1e-1", "1e0"] {
            assert!(svg.contains(&format!(">{d}<")), "missing {d}");
        }
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn linear_axis() {
        let svg = render(&plot(false, vec![(0.0, 1.0), (10.0, 1.75)])).unwrap();
        assert!(!svg.contains(">1e"));
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn no_points_is_an_error() {
        assert!(render(&plot(true, vec![(0.0, 0.0)])).is_err());
        assert!(render(&plot(false, vec![])).is_err());
    }
}
