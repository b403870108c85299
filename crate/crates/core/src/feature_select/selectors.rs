use serde::{Deserialize, Serialize};

use super::scoring::ScoreFn;
use super::FeatureSelection;
use crate::error::{Error, Result};
use crate::numerics::{column_variance, percentile, Matrix};

/// Declarative description of a selector, as read from a config document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectorSpec {
    VarianceThreshold {
        threshold: f64,
    },
    AdaptiveVariance {
        percentile: f64,
    },
    SelectKBest {
        k: usize,
        score_fn: ScoreFn,
    },
    /// Mean-rank aggregation over the scores of several `select_k_best`
    /// methods. Their own `k` is ignored.
    RankAggregated {
        methods: Vec<SelectorSpec>,
        k: usize,
    },
}

impl SelectorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SelectorSpec::VarianceThreshold { .. } => "variance_threshold",
            SelectorSpec::AdaptiveVariance { .. } => "adaptive_variance",
            SelectorSpec::SelectKBest { .. } => "select_k_best",
            SelectorSpec::RankAggregated { .. } => "rank_aggregated",
        }
    }

    pub fn needs_labels(&self) -> bool {
        matches!(
            self,
            SelectorSpec::SelectKBest { .. } | SelectorSpec::RankAggregated { .. }
        )
    }

    /// Checks parameter ranges that do not depend on the data.
    pub fn validate(&self) -> Result<()> {
        match self {
            SelectorSpec::VarianceThreshold { threshold } => {
                if !(threshold.is_finite() && *threshold >= 0.0) {
                    return Err(Error::invalid(format!(
                        "variance threshold must be ≥ 0, got {threshold}"
                    )));
                }
            }
            SelectorSpec::AdaptiveVariance { percentile } => {
                if !(0.0..=100.0).contains(percentile) {
                    return Err(Error::invalid(format!(
                        "percentile {percentile} outside [0, 100]"
                    )));
                }
            }
            SelectorSpec::SelectKBest { k, .. } => {
                if *k == 0 {
                    return Err(Error::invalid("k must be at least 1"));
                }
            }
            SelectorSpec::RankAggregated { methods, k } => {
                if *k == 0 {
                    return Err(Error::invalid("k must be at least 1"));
                }
                if methods.is_empty() {
                    return Err(Error::invalid("rank aggregation needs at least one method"));
                }
                for m in methods {
                    m.score_fn()?;
                }
            }
        }
        Ok(())
    }

    fn score_fn(&self) -> Result<ScoreFn> {
        match self {
            SelectorSpec::SelectKBest { score_fn, .. } => Ok(*score_fn),
            other => Err(Error::invalid(format!(
                "method does not expose scores ({})",
                other.kind()
            ))),
        }
    }

    pub fn fit(&self, x: &Matrix, y: Option<&[usize]>) -> Result<FeatureSelection> {
        self.validate()?;
        let labels =
            || y.ok_or_else(|| Error::invalid(format!("{} requires class labels", self.kind())));
        match self {
            SelectorSpec::VarianceThreshold { threshold } => fit_variance_threshold(x, *threshold),
            SelectorSpec::AdaptiveVariance { percentile } => fit_adaptive_variance(x, *percentile),
            SelectorSpec::SelectKBest { k, score_fn } => {
                fit_select_k_best(x, labels()?, *score_fn, *k)
            }
            SelectorSpec::RankAggregated { methods, k } => {
                fit_rank_aggregated(x, labels()?, methods, *k)
            }
        }
    }
}

/// Keeps features with variance strictly above `threshold`; at 0 this drops
/// exact constants only. May select nothing.
pub fn fit_variance_threshold(x: &Matrix, threshold: f64) -> Result<FeatureSelection> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::invalid(format!(
            "variance threshold must be ≥ 0, got {threshold}"
        )));
    }
    let var = column_variance(x);
    let selected = (0..var.len()).filter(|&j| var[j] > threshold).collect();
    Ok(FeatureSelection::new(x.cols(), selected, Some(var))?.with_threshold(threshold))
}

/// Variance threshold set at the given percentile of the feature variances.
/// Features strictly below the cut-off are dropped, so the
/// highest-variance feature always survives.
pub fn fit_adaptive_variance(x: &Matrix, pct: f64) -> Result<FeatureSelection> {
    let var = column_variance(x);
    let t = percentile(&var, pct)?;
    let selected = (0..var.len()).filter(|&j| var[j] >= t).collect();
    Ok(FeatureSelection::new(x.cols(), selected, Some(var))?.with_threshold(t))
}

/// Indices of the `k` highest scores, ties toward the lower index, returned
/// in increasing order.
pub(crate) fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut chosen = order[..k.min(order.len())].to_vec();
    chosen.sort_unstable();
    chosen
}

fn check_k(k: usize, cols: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > cols {
        return Err(Error::invalid(format!(
            "k exceeds feature count ({k} > {cols})"
        )));
    }
    Ok(())
}

pub fn fit_select_k_best(
    x: &Matrix,
    y: &[usize],
    score_fn: ScoreFn,
    k: usize,
) -> Result<FeatureSelection> {
    check_k(k, x.cols())?;
    let scores = score_fn.score(x, y)?;
    FeatureSelection::new(x.cols(), top_k(&scores, k), Some(scores))
}

/// Fractional ranks by descending score: best is 1, ties share the mean of
/// the ranks they span.
pub fn fractional_ranks(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

/// Selects the `k` features with the smallest mean fractional rank across
/// the given score vectors. The stored scores are the negated mean ranks,
/// so higher is still better.
pub fn aggregate_ranks(score_sets: &[Vec<f64>], k: usize) -> Result<FeatureSelection> {
    let first = score_sets
        .first()
        .ok_or_else(|| Error::invalid("rank aggregation needs at least one method"))?;
    let p = first.len();
    if score_sets.iter().any(|s| s.len() != p) {
        return Err(Error::invalid("score vectors differ in length"));
    }
    check_k(k, p)?;
    // Rank sums are multiples of 0.5 and therefore exact; comparing sums
    // instead of means avoids division rounding in the tie-break.
    let mut rank_sums = vec![0.0; p];
    for scores in score_sets {
        for (acc, r) in rank_sums.iter_mut().zip(fractional_ranks(scores)) {
            *acc += r;
        }
    }
    let neg_sums: Vec<f64> = rank_sums.iter().map(|s| -s).collect();
    let selected = top_k(&neg_sums, k);
    let m = score_sets.len() as f64;
    let neg_means = rank_sums.iter().map(|s| -s / m).collect();
    FeatureSelection::new(p, selected, Some(neg_means))
}

pub fn fit_rank_aggregated(
    x: &Matrix,
    y: &[usize],
    methods: &[SelectorSpec],
    k: usize,
) -> Result<FeatureSelection> {
    if methods.is_empty() {
        return Err(Error::invalid("rank aggregation needs at least one method"));
    }
    check_k(k, x.cols())?;
    let score_sets = methods
        .iter()
        .map(|m| m.score_fn()?.score(x, y))
        .collect::<Result<Vec<_>>>()?;
    aggregate_ranks(&score_sets, k)
}

/// Fits each spec on the previous stage's output; the result is expressed in
/// the original column indices of `x`.
pub fn fit_chained(
    x: &Matrix,
    y: Option<&[usize]>,
    specs: &[SelectorSpec],
) -> Result<FeatureSelection> {
    if specs.is_empty() {
        return Err(Error::invalid("selector chain is empty"));
    }
    let mut combined = FeatureSelection::identity(x.cols())?;
    let mut current = x.clone();
    for (stage, spec) in specs.iter().enumerate() {
        let sel = spec.fit(&current, y)?;
        if sel.is_empty() {
            return Err(Error::ChainStageEmpty {
                stage: stage + 1,
                kind: spec.kind().to_string(),
            });
        }
        current = sel.transform(&current)?;
        combined = combined.compose(&sel)?;
    }
    Ok(combined)
}
