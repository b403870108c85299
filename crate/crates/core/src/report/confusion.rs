use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::svg::{escape, num};
use crate::error::{Error, Result};

/// Counts of (true class, predicted class) pairs; rows are true classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub class_names: Vec<String>,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// `trace / total`.
    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn row_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Count and percentage of the true-class row, e.g. `5 (100.0%)`; rows
    /// with no samples show `—` instead of a percentage.
    pub fn cell_label(&self, i: usize, j: usize) -> String {
        let c = self.counts[i][j];
        let row = self.row_total(i);
        if row == 0 {
            format!("{c} (—)")
        } else {
            format!("{c} ({:.1}%)", 100.0 * c as f64 / row as f64)
        }
    }

    /// Fixed-width text rendering with the same numbers as the SVG.
    pub fn text_table(&self) -> String {
        let n = self.n_classes();
        let labels: Vec<Vec<String>> = (0..n)
            .map(|i| (0..n).map(|j| self.cell_label(i, j)).collect())
            .collect();
        let name_w = self
            .class_names
            .iter()
            .map(|s| s.chars().count())
            .max()
            .unwrap_or(0)
            .max("true\\pred".len());
        let cell_w = labels
            .iter()
            .flatten()
            .map(|s| s.chars().count())
            .chain(self.class_names.iter().map(|s| s.chars().count()))
            .max()
            .unwrap_or(1);
        let pad = |s: &str, w: usize, left: bool| {
            let fill = " ".repeat(w.saturating_sub(s.chars().count()));
            if left {
                format!("{s}{fill}")
            } else {
                format!("{fill}{s}")
            }
        };
        let mut out = pad("true\\pred", name_w, true);
        for name in &self.class_names {
            out.push_str("  ");
            out.push_str(&pad(name, cell_w, false));
        }
        out.push('\n');
        for (i, row) in labels.iter().enumerate() {
            out.push_str(&pad(&self.class_names[i], name_w, true));
            for cell in row {
                out.push_str("  ");
                out.push_str(&pad(cell, cell_w, false));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "accuracy: {}/{} = {:.6}",
            self.trace(),
            self.total(),
            self.accuracy()
        );
        out
    }
}

pub fn confusion_matrix(
    true_labels: &[usize],
    predicted: &[usize],
    class_names: &[String],
) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted.len() {
        return Err(Error::invalid(format!(
            "{} true labels but {} predictions",
            true_labels.len(),
            predicted.len()
        )));
    }
    let n = class_names.len();
    if n == 0 {
        return Err(Error::invalid("confusion matrix needs at least one class"));
    }
    let mut counts = vec![vec![0u64; n]; n];
    for (&t, &p) in true_labels.iter().zip(predicted) {
        if t >= n || p >= n {
            return Err(Error::invalid(format!(
                "label {} out of range for {n} classes",
                t.max(p)
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        class_names: class_names.to_vec(),
    })
}

const CELL: f64 = 90.0;
const MARGIN_LEFT: f64 = 140.0;
const MARGIN_TOP: f64 = 80.0;

/// Heat-map style SVG grid: one cell per (true, predicted) pair shaded by
/// its row share, with the cell label written inside.
pub fn render_confusion(cm: &ConfusionMatrix, title: &str) -> String {
    let n = cm.n_classes();
    let width = MARGIN_LEFT + CELL * n as f64 + 40.0;
    let height = MARGIN_TOP + CELL * n as f64 + 80.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        num(width),
        num(height),
        num(width),
        num(height)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" font-size="18" text-anchor="middle">{}</text>"#,
        num(width / 2.0),
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">Predicted</text>"#,
        num(MARGIN_LEFT + CELL * n as f64 / 2.0),
        num(MARGIN_TOP + CELL * n as f64 + 50.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {})">True</text>"#,
        num(MARGIN_TOP + CELL * n as f64 / 2.0),
        num(MARGIN_TOP + CELL * n as f64 / 2.0)
    );
    for (j, name) in cm.class_names.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            num(MARGIN_LEFT + CELL * (j as f64 + 0.5)),
            num(MARGIN_TOP - 10.0),
            escape(name)
        );
    }
    for i in 0..n {
        let y = MARGIN_TOP + CELL * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{}</text>"#,
            num(MARGIN_LEFT - 10.0),
            num(y + CELL / 2.0 + 4.0),
            escape(&cm.class_names[i])
        );
        let row = cm.row_total(i);
        for j in 0..n {
            let x = MARGIN_LEFT + CELL * j as f64;
            let share = if row == 0 {
                0.0
            } else {
                cm.counts[i][j] as f64 / row as f64
            };
            // white → steel blue
            let r = (255.0 - share * (255.0 - 70.0)).round() as u8;
            let g = (255.0 - share * (255.0 - 130.0)).round() as u8;
            let b = (255.0 - share * (255.0 - 180.0)).round() as u8;
            let ink = if share > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#{r:02x}{g:02x}{b:02x}" stroke="#444"/>"##,
                num(x),
                num(y),
                num(CELL),
                num(CELL)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" fill="{ink}" data-row="{i}" data-col="{j}">{}</text>"#,
                num(x + CELL / 2.0),
                num(y + CELL / 2.0 + 4.0),
                escape(&cm.cell_label(i, j))
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
