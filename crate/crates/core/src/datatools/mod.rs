//! Dataset management: stratified directory splits, fractional
//! subsampling, CSV ingestion and in-memory stratified splits.
//!
//! Directory datasets use one subdirectory per class holding the files of
//! that class directly (no nesting). Files are always copied, never moved.

mod split;
mod subsample;
mod tabular;

pub use split::{
    execute_split, plan_split, ClassSplit, SplitPlan, SplitRatios, SplitSummary, SPLIT_NAMES,
};
pub use subsample::{subsample, subsample_count};
pub use tabular::{load_csv, read_csv, stratified_split, TabularDataset};
