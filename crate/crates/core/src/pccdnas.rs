//! PCA-cascade architecture search for dense networks.
//!
//! The first hidden layer gets as many units as principal components are
//! needed to explain the configured share of variance in the (prepared)
//! training inputs. Every further layer is sized the same way from the
//! inference-mode activations of the previous hidden layer after the
//! network built so far has been trained with a temporary output head.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{
    encode_targets, train, Activation, Dataset, DenseNetwork, Init, LayerSpec, Mode, TrainConfig,
    TrainingHistory,
};
use crate::numerics::{fit_pca, Matrix, Scaler};

/// Per-layer variance targets: one value for every layer, or a list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PcaVariance {
    Uniform(f64),
    PerLayer(Vec<f64>),
}

impl PcaVariance {
    /// Expands to exactly `layers` thresholds, each in `(0, 1]`.
    pub fn thresholds(&self, layers: usize) -> Result<Vec<f64>> {
        let values = match self {
            PcaVariance::Uniform(t) => vec![*t; layers],
            PcaVariance::PerLayer(v) => {
                if v.len() != layers {
                    return Err(Error::invalid(format!(
                        "pca_variance lists {} thresholds for {layers} layers",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        if let Some(bad) = values.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::invalid(format!(
                "variance threshold out of range: {bad} not in (0, 1]"
            )));
        }
        Ok(values)
    }
}

/// Settings shared by every searched hidden layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HiddenTemplate {
    pub activation: Activation,
    pub dropout: f64,
    pub l2: f64,
    pub init: Init,
    pub batch_norm: bool,
}

impl Default for HiddenTemplate {
    fn default() -> Self {
        HiddenTemplate {
            activation: Activation::Relu,
            dropout: 0.2,
            l2: 0.01,
            init: Init::HeNormal,
            batch_norm: true,
        }
    }
}

impl HiddenTemplate {
    fn layer(&self, units: usize) -> LayerSpec {
        LayerSpec {
            units,
            activation: self.activation,
            dropout_rate: self.dropout,
            batch_norm: self.batch_norm,
            l2: self.l2,
            init: self.init,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub layers: usize,
    pub pca_variance: PcaVariance,
    pub normalize: bool,
    pub unit: bool,
    pub hidden: HiddenTemplate,
    pub output_neurons: usize,
    pub out_activation: Activation,
    pub train: TrainConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            layers: 3,
            pca_variance: PcaVariance::PerLayer(vec![0.95, 0.84, 0.63]),
            normalize: true,
            unit: true,
            hidden: HiddenTemplate::default(),
            output_neurons: 1,
            out_activation: Activation::Sigmoid,
            train: TrainConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<Vec<f64>> {
        if self.layers == 0 {
            return Err(Error::invalid("layers must be at least 1"));
        }
        if self.output_neurons == 0 {
            return Err(Error::invalid("output_neurons must be positive"));
        }
        if !matches!(
            self.out_activation,
            Activation::Sigmoid | Activation::Softmax | Activation::Linear
        ) {
            return Err(Error::invalid(
                "out_activation must be sigmoid, softmax or linear",
            ));
        }
        if self.hidden.activation == Activation::Softmax {
            return Err(Error::invalid("hidden layers cannot use softmax"));
        }
        if self.unit && !self.normalize {
            return Err(Error::invalid("unit scaling requires normalize = true"));
        }
        self.hidden.layer(1).validate()?;
        self.train.validate()?;
        self.pca_variance.thresholds(self.layers)
    }

    fn head(&self) -> LayerSpec {
        LayerSpec::new(self.output_neurons, self.out_activation)
            .with_l2(self.hidden.l2)
            .with_init(self.hidden.init)
    }
}

/// Training and validation data after optional centering/scaling.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub x_train: Matrix,
    pub y_train: Vec<usize>,
    pub x_val: Option<Matrix>,
    pub y_val: Option<Vec<usize>>,
    /// Fitted on the training inputs; `None` when `normalize` is off.
    pub scaler: Option<Scaler>,
}

/// Centers (`normalize`) and optionally unit-scales (`unit`) the inputs with
/// statistics of the training set, applying the same transform to the
/// validation set.
pub fn data_init(
    x_train: &Matrix,
    y_train: &[usize],
    validation: Option<(&Matrix, &[usize])>,
    normalize: bool,
    unit: bool,
) -> Result<PreparedData> {
    if y_train.len() != x_train.rows() {
        return Err(Error::invalid(format!(
            "{} training labels for {} rows",
            y_train.len(),
            x_train.rows()
        )));
    }
    if let Some((xv, yv)) = validation {
        if xv.cols() != x_train.cols() {
            return Err(Error::invalid(format!(
                "validation width {} does not match training width {}",
                xv.cols(),
                x_train.cols()
            )));
        }
        if yv.len() != xv.rows() {
            return Err(Error::invalid(format!(
                "{} validation labels for {} rows",
                yv.len(),
                xv.rows()
            )));
        }
    }
    let scaler = normalize.then(|| Scaler::fit(x_train, unit));
    let prepare = |x: &Matrix| match &scaler {
        Some(s) => s.apply(x),
        None => Ok(x.clone()),
    };
    Ok(PreparedData {
        x_train: prepare(x_train)?,
        y_train: y_train.to_vec(),
        x_val: validation.map(|(x, _)| prepare(x)).transpose()?,
        y_val: validation.map(|(_, y)| y.to_vec()),
        scaler,
    })
}

/// Diagnostics of one sizing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub threshold: f64,
    /// Explained-variance ratios of the PCA that sized this layer.
    pub explained_variance_ratio: Vec<f64>,
    pub width: usize,
    /// No principal component survived (e.g. a dead relu layer); the width
    /// was clamped to 1.
    pub degenerate: bool,
    /// Training run whose activations were analysed; `None` for the first
    /// layer, which is sized from the inputs.
    pub history: Option<TrainingHistory>,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub model: DenseNetwork,
    pub widths: Vec<usize>,
    pub stages: Vec<StageReport>,
    pub final_history: TrainingHistory,
}

impl SearchResult {
    /// Tab-separated `layer  width` table with a header row.
    pub fn widths_table(&self) -> String {
        let mut out = String::from("layer\twidth\tthreshold\tdegenerate\n");
        for (i, s) in self.stages.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                i + 1,
                s.width,
                s.threshold,
                s.degenerate
            );
        }
        out
    }

    /// Tab-separated `layer  component  ratio  cumulative` table.
    pub fn variance_table(&self) -> String {
        let mut out = String::from("layer\tcomponent\tratio\tcumulative\n");
        for (i, s) in self.stages.iter().enumerate() {
            let mut acc = 0.0;
            for (c, r) in s.explained_variance_ratio.iter().enumerate() {
                acc += r;
                let _ = writeln!(out, "{}\t{}\t{:.12}\t{:.12}", i + 1, c + 1, r, acc);
            }
        }
        out
    }
}

/// Hooks into the search loop.
pub trait SearchObserver {
    /// Called before every training run; `stage` is the 1-based index of the
    /// layer about to be sized, or `None` for the final training.
    fn on_train_start(&mut self, _stage: Option<usize>) {}
}

impl SearchObserver for () {}

pub fn build(search: &SearchConfig, data: &PreparedData) -> Result<SearchResult> {
    build_with_observer(search, data, &mut ())
}

pub fn build_with_observer(
    search: &SearchConfig,
    data: &PreparedData,
    observer: &mut dyn SearchObserver,
) -> Result<SearchResult> {
    let thresholds = search.validate()?;
    let targets = encode_targets(&data.y_train, search.output_neurons)?;
    let val_targets = match &data.y_val {
        Some(y) => Some(encode_targets(y, search.output_neurons)?),
        None => None,
    };
    let train_set = Dataset::new(&data.x_train, &targets)?;
    let val_set = match (&data.x_val, &val_targets) {
        (Some(x), Some(y)) => Some(Dataset::new(x, y)?),
        _ => None,
    };

    let mut net = DenseNetwork::new(data.x_train.cols(), search.train.seed)?;
    let mut stages = Vec::with_capacity(search.layers);

    let first = size_from(&data.x_train, thresholds[0])?;
    net.push_layer(search.hidden.layer(first.0))?;
    stages.push(StageReport {
        threshold: thresholds[0],
        explained_variance_ratio: first.1,
        width: first.0,
        degenerate: first.2,
        history: None,
    });

    for (stage, &threshold) in thresholds.iter().enumerate().skip(1) {
        let stage_no = stage + 1;
        net.push_layer(search.head())?;
        observer.on_train_start(Some(stage_no));
        let cfg = stage_config(&search.train, stage as u64);
        let history =
            train(&mut net, train_set, val_set, &cfg).map_err(|e| stage_error(stage_no, e))?;

        let outputs = net.forward(&data.x_train, Mode::Infer)?;
        let activations = &outputs[outputs.len() - 2];
        let (width, ratios, degenerate) = size_from(activations, threshold)?;

        net.pop_layer();
        net.push_layer(search.hidden.layer(width))?;
        stages.push(StageReport {
            threshold,
            explained_variance_ratio: ratios,
            width,
            degenerate,
            history: Some(history),
        });
    }

    net.push_layer(search.head())?;
    observer.on_train_start(None);
    let cfg = stage_config(&search.train, search.layers as u64);
    let final_history =
        train(&mut net, train_set, val_set, &cfg).map_err(|e| stage_error(search.layers + 1, e))?;

    Ok(SearchResult {
        widths: stages.iter().map(|s| s.width).collect(),
        model: net,
        stages,
        final_history,
    })
}

/// Width for one layer from a PCA of `x`: (width, ratios, degenerate).
fn size_from(x: &Matrix, threshold: f64) -> Result<(usize, Vec<f64>, bool)> {
    let pca = fit_pca(x)?;
    let width = pca.n_components_for_variance(threshold)?;
    Ok((
        width,
        pca.explained_variance_ratio().to_vec(),
        pca.n_components() == 0,
    ))
}

fn stage_config(base: &TrainConfig, stage: u64) -> TrainConfig {
    TrainConfig {
        seed: base.seed.wrapping_add(stage),
        ..base.clone()
    }
}

fn stage_error(stage: usize, e: Error) -> Error {
    match e {
        Error::Divergence { .. } => Error::StageDivergence {
            stage,
            source: Box::new(e),
        },
        other => other,
    }
}
