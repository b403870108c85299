use std::fmt::Write as _;

use super::svg::{escape, num};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 60.0;
const BOTTOM: f64 = 50.0;

/// Cumulative explained-variance curve over component count, with the
/// target `threshold` as a dashed line and `width` (the chosen component
/// count) marked. An empty `ratios` slice yields axes only.
pub fn render_variance_curve(ratios: &[f64], threshold: f64, width: usize, title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let n = ratios.len().max(1);
    let x_of = |c: usize| {
        if n == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * (c - 1) as f64 / (n - 1) as f64
        }
    };
    let y_of = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        num(WIDTH),
        num(HEIGHT),
        num(WIDTH),
        num(HEIGHT)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" font-size="18" text-anchor="middle">{}</text>"#,
        num(WIDTH / 2.0),
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        num(LEFT),
        num(TOP),
        num(plot_w),
        num(plot_h)
    );
    for t in 0..=4 {
        let v = t as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{:.2}</text>"#,
            num(LEFT - 6.0),
            num(y_of(v) + 4.0),
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">components</text>"#,
        num(LEFT + plot_w / 2.0),
        num(HEIGHT - 12.0)
    );
    let _ = writeln!(
        s,
        r#"<line class="threshold" x1="{}" y1="{}" x2="{}" y2="{}" stroke="red" stroke-dasharray="6 4"/>"#,
        num(LEFT),
        num(y_of(threshold)),
        num(LEFT + plot_w),
        num(y_of(threshold))
    );

    let mut acc = 0.0;
    let mut points = Vec::with_capacity(ratios.len());
    for (i, r) in ratios.iter().enumerate() {
        acc += r;
        points.push((i + 1, acc));
    }
    let line: Vec<String> = points
        .iter()
        .map(|&(c, v)| format!("{},{}", num(x_of(c)), num(y_of(v))))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline class="cumulative" fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
        line.join(" ")
    );
    for &(c, v) in &points {
        let _ = writeln!(
            s,
            r##"<circle cx="{}" cy="{}" r="2.5" fill="#1f77b4"/>"##,
            num(x_of(c)),
            num(y_of(v))
        );
    }
    if let Some(&(c, v)) = points.get(width.wrapping_sub(1)) {
        let _ = writeln!(
            s,
            r#"<circle class="marker" data-width="{c}" cx="{}" cy="{}" r="6" fill="none" stroke="red" stroke-width="2"/>"#,
            num(x_of(c)),
            num(y_of(v))
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="red">{c} components, {:.4}</text>"#,
            num(x_of(c) + 8.0),
            num(y_of(v) + 16.0),
            v
        );
    }
    s.push_str("</svg>\n");
    s
}
