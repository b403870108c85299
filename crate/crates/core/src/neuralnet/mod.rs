//! Dense feed-forward networks: layers, losses, training with early
//! stopping, and the `.cmnet` file format.

mod io;
mod layer;
mod loss;
mod network;
mod train;

pub use io::{ModelFile, CMNET_EXTENSION, CMNET_FORMAT, CMNET_VERSION};
pub use layer::{Activation, BatchNormParams, DenseLayer, Init, LayerSpec};
pub use loss::{loss_value, LossKind, PROB_CLAMP};
pub use network::{argmax_rows, binary_labels, DenseNetwork, Gradients, Mode, Task};
pub use train::{
    accuracy, encode_targets, train, train_with_observer, Dataset, EarlyStopping, EpochRecord,
    EsMode, Metric, OptimizerKind, TrainConfig, TrainObserver, TrainingHistory, Verdict,
    ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON,
};
