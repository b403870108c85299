//! Matrix container, descriptive statistics, seeded randomness and PCA.

mod matrix;
mod pca;
mod rng;
mod stats;

pub use matrix::Matrix;
pub use pca::{fit_pca, n_components_for_variance, transform_pca, PcaModel, RANK_TOLERANCE};
pub use rng::Rng;
pub use stats::{column_std, column_variance, percentile, Scaler};
