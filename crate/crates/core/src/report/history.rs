use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::svg::{escape, num};
use crate::error::{Error, Result};
use crate::neuralnet::TrainingHistory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub show_min_max: bool,
    /// Metric drawn in a second panel, e.g. `accuracy`.
    pub user_metric: Option<String>,
    pub title: String,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            show_min_max: true,
            user_metric: Some("accuracy".to_string()),
            title: "Training history".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// A highlighted point: `epoch` is a 0-based index into the history.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub series: String,
    pub epoch: usize,
    pub value: f64,
    pub kind: Extremum,
}

/// First index of the smallest (or largest) value.
pub fn extremum_index(values: &[f64], kind: Extremum) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => match kind {
                Extremum::Min => v < values[b],
                Extremum::Max => v > values[b],
            },
        };
        if better {
            best = Some(i);
        }
    }
    best
}

struct Panel {
    metric: String,
    train: Vec<f64>,
    val: Option<Vec<f64>>,
    marker: Option<Marker>,
}

fn panels(history: &TrainingHistory, spec: &PlotSpec) -> Result<Vec<Panel>> {
    if history.is_empty() {
        return Err(Error::invalid("cannot plot an empty history"));
    }
    let mut metrics = vec![("loss".to_string(), Extremum::Min)];
    if let Some(m) = &spec.user_metric {
        if !history.has_metric(m) {
            return Err(Error::invalid(format!("unknown user_metric '{m}'")));
        }
        metrics.push((m.clone(), Extremum::Max));
    }
    metrics
        .into_iter()
        .map(|(metric, kind)| {
            let train = history
                .series(&metric)
                .ok_or_else(|| Error::invalid(format!("history lacks '{metric}'")))?;
            let val_name = format!("val_{metric}");
            let val = history.series(&val_name);
            let (target_name, target) = match &val {
                Some(v) => (val_name, v),
                None => (metric.clone(), &train),
            };
            let marker = spec.show_min_max.then(|| {
                let epoch = extremum_index(target, kind).expect("nonempty");
                Marker {
                    series: target_name,
                    epoch,
                    value: target[epoch],
                    kind,
                }
            });
            Ok(Panel {
                metric,
                train,
                val,
                marker,
            })
        })
        .collect()
}

/// Epochs and values annotated by [`render_history`].
pub fn min_max_markers(history: &TrainingHistory, spec: &PlotSpec) -> Result<Vec<Marker>> {
    Ok(panels(history, spec)?
        .into_iter()
        .filter_map(|p| p.marker)
        .collect())
}

const WIDTH: f64 = 720.0;
const PANEL_H: f64 = 260.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 60.0;
const GAP: f64 = 70.0;
const TRAIN_COLOUR: &str = "#1f77b4";
const VAL_COLOUR: &str = "#ff7f0e";

/// SVG document with a loss panel and, when `user_metric` is set, a second
/// panel for that metric. Each panel shows the training series and, if
/// recorded, its `val_` counterpart over the epochs.
pub fn render_history(history: &TrainingHistory, spec: &PlotSpec) -> Result<String> {
    let panels = panels(history, spec)?;
    let height = TOP + panels.len() as f64 * (PANEL_H + GAP);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        num(WIDTH),
        num(height),
        num(WIDTH),
        num(height)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" font-size="18" text-anchor="middle">{}</text>"#,
        num(WIDTH / 2.0),
        escape(&spec.title)
    );
    for (p, panel) in panels.iter().enumerate() {
        let top = TOP + p as f64 * (PANEL_H + GAP);
        draw_panel(&mut s, panel, top, history.len());
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn draw_panel(s: &mut String, panel: &Panel, top: f64, epochs: usize) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let bottom = top + PANEL_H;
    let all = panel.train.iter().chain(panel.val.iter().flatten());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    } else {
        let pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    let x_of = |i: usize| {
        if epochs <= 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * i as f64 / (epochs - 1) as f64
        }
    };
    let y_of = |v: f64| bottom - PANEL_H * (v - lo) / (hi - lo);

    let _ = writeln!(
        s,
        r#"<g class="panel" data-metric="{}">"#,
        escape(&panel.metric)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
        num(LEFT),
        num(top),
        num(plot_w),
        num(PANEL_H)
    );
    for t in 0..=4 {
        let v = lo + (hi - lo) * t as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#ddd"/>"##,
            num(LEFT),
            num(y),
            num(LEFT + plot_w),
            num(y)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{:.4}</text>"#,
            num(LEFT - 6.0),
            num(y + 4.0),
            v
        );
    }
    let ticks = epochs.clamp(1, 10);
    for t in 0..ticks {
        let i = if ticks == 1 {
            0
        } else {
            t * (epochs - 1) / (ticks - 1)
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{}</text>"#,
            num(x_of(i)),
            num(bottom + 16.0),
            i + 1
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">epoch</text>"#,
        num(LEFT + plot_w / 2.0),
        num(bottom + 34.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14">{}</text>"#,
        num(LEFT),
        num(top - 8.0),
        escape(&panel.metric)
    );

    let mut series = vec![(panel.metric.clone(), &panel.train, TRAIN_COLOUR)];
    if let Some(v) = &panel.val {
        series.push((format!("val_{}", panel.metric), v, VAL_COLOUR));
    }
    for (k, (name, values, colour)) in series.iter().enumerate() {
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{},{}", num(x_of(i)), num(y_of(v))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-series="{}" fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            escape(name),
            points.join(" ")
        );
        for (i, &v) in values.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<circle cx="{}" cy="{}" r="2.5" fill="{colour}"/>"#,
                num(x_of(i)),
                num(y_of(v))
            );
        }
        let lx = LEFT + plot_w - 150.0;
        let ly = top + 18.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{colour}" stroke-width="2"/>"#,
            num(lx),
            num(ly - 4.0),
            num(lx + 24.0),
            num(ly - 4.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            num(lx + 30.0),
            num(ly),
            escape(name)
        );
    }

    if let Some(m) = &panel.marker {
        let (cx, cy) = (x_of(m.epoch), y_of(m.value));
        let word = match m.kind {
            Extremum::Min => "min",
            Extremum::Max => "max",
        };
        let _ = writeln!(
            s,
            r#"<circle class="marker" data-series="{}" data-epoch="{}" cx="{}" cy="{}" r="6" fill="none" stroke="red" stroke-width="2"/>"#,
            escape(&m.series),
            m.epoch,
            num(cx),
            num(cy)
        );
        let anchor = if cx > LEFT + plot_w * 0.7 {
            "end"
        } else {
            "start"
        };
        let dx = if anchor == "end" { -10.0 } else { 10.0 };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="red" text-anchor="{anchor}">{word} {} {:.4} (epoch {})</text>"#,
            num(cx + dx),
            num(cy - 10.0),
            escape(&m.series),
            m.value,
            m.epoch + 1
        );
    }
    s.push_str("</g>\n");
}
