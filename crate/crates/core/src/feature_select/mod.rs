//! Feature selectors sharing one fit/transform contract: plain and adaptive
//! variance thresholds, univariate top-k, mean-rank aggregation, and chains.

mod scoring;
mod selection;
mod selectors;

pub use scoring::{score_f_classif, score_mutual_info, ScoreFn, DEFAULT_MI_BINS, F_SENTINEL};
pub use selection::FeatureSelection;
pub use selectors::{
    aggregate_ranks, fit_adaptive_variance, fit_chained, fit_rank_aggregated, fit_select_k_best,
    fit_variance_threshold, fractional_ranks, SelectorSpec,
};
