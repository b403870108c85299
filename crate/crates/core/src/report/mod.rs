//! Training-curve, explained-variance and confusion-matrix reports as
//! standalone SVG documents.

mod confusion;
mod history;
mod svg;
mod variance;

pub use confusion::{confusion_matrix, render_confusion, ConfusionMatrix};
pub use history::{extremum_index, min_max_markers, render_history, Extremum, Marker, PlotSpec};
pub use variance::render_variance_curve;
