use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// A fitted selector: which original columns survive, plus optional scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    input_dim: usize,
    selected: Vec<usize>,
    scores: Option<Vec<f64>>,
    /// Cut-off used by variance-based selectors, kept for reporting.
    threshold: Option<f64>,
}

impl FeatureSelection {
    /// `selected` must be strictly increasing and below `input_dim`; it may be
    /// empty, in which case [`transform`](Self::transform) errors.
    pub fn new(input_dim: usize, selected: Vec<usize>, scores: Option<Vec<f64>>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("feature selection over zero features"));
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "selected indices must be strictly increasing, got {selected:?}"
            )));
        }
        if let Some(&last) = selected.last() {
            if last >= input_dim {
                return Err(Error::invalid(format!(
                    "selected index {last} out of range for {input_dim} features"
                )));
            }
        }
        if let Some(s) = &scores {
            if s.len() != input_dim {
                return Err(Error::invalid(format!(
                    "{} scores for {input_dim} features",
                    s.len()
                )));
            }
        }
        Ok(FeatureSelection {
            input_dim,
            selected,
            scores,
            threshold: None,
        })
    }

    pub fn identity(input_dim: usize) -> Result<Self> {
        FeatureSelection::new(input_dim, (0..input_dim).collect(), None)
    }

    pub(crate) fn with_threshold(mut self, t: f64) -> Self {
        self.threshold = Some(t);
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Keeps the selected columns of `x` in their original order.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim {
            return Err(Error::invalid(format!(
                "fitted on different width: expected {} columns, got {}",
                self.input_dim,
                x.cols()
            )));
        }
        if self.selected.is_empty() {
            return Err(Error::NoFeaturesSurvive);
        }
        x.select_columns(&self.selected)
    }

    /// Re-expresses a selection fitted on `self`'s output in the original
    /// index space of `self`.
    pub fn compose(&self, next: &FeatureSelection) -> Result<FeatureSelection> {
        if next.input_dim != self.selected.len() {
            return Err(Error::invalid(format!(
                "cannot compose: stage expects {} inputs, previous stage yields {}",
                next.input_dim,
                self.selected.len()
            )));
        }
        let selected = next.selected.iter().map(|&i| self.selected[i]).collect();
        let mut out = FeatureSelection::new(self.input_dim, selected, None)?;
        out.threshold = next.threshold;
        Ok(out)
    }
}
