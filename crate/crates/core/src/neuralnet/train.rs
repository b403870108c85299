use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::layer::DenseLayer;
use super::loss::LossKind;
use super::network::{argmax_rows, binary_labels, DenseNetwork};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsMode {
    Min,
    Max,
}

/// Metrics computed besides the loss. New metrics slot in here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
        }
    }

    pub fn evaluate(self, pred: &Matrix, targets: &Matrix) -> f64 {
        match self {
            Metric::Accuracy => accuracy(pred, targets),
        }
    }
}

/// Fraction of rows whose predicted class matches the target class: a 0.5
/// cut-off for single-output networks, argmax otherwise.
pub fn accuracy(pred: &Matrix, targets: &Matrix) -> f64 {
    let (p, t) = if pred.cols() == 1 {
        (binary_labels(pred), binary_labels(targets))
    } else {
        (argmax_rows(pred), argmax_rows(targets))
    };
    let hits = p.iter().zip(&t).filter(|(a, b)| a == b).count();
    hits as f64 / p.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub learn_rate: f64,
    pub stop_criteria: String,
    pub es_mode: EsMode,
    pub es_patience: usize,
    pub metrics: Vec<Metric>,
    pub verbose: u8,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            loss: LossKind::BinaryCrossentropy,
            optimizer: OptimizerKind::Adam,
            learn_rate: 0.001,
            stop_criteria: "val_loss".to_string(),
            es_mode: EsMode::Min,
            es_patience: 5,
            metrics: vec![Metric::Accuracy],
            verbose: 0,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.learn_rate.is_finite() && self.learn_rate >= 0.0) {
            return Err(Error::invalid(format!(
                "learn_rate must be a finite non-negative number, got {}",
                self.learn_rate
            )));
        }
        if self.es_patience > self.epochs {
            return Err(Error::invalid(format!(
                "es_patience {} exceeds epochs {}",
                self.es_patience, self.epochs
            )));
        }
        if self.verbose > 1 {
            return Err(Error::invalid("verbose must be 0 or 1"));
        }
        let base = self
            .stop_criteria
            .strip_prefix("val_")
            .unwrap_or(&self.stop_criteria);
        let known = base == "loss" || self.metrics.iter().any(|m| m.name() == base);
        if !known {
            return Err(Error::invalid(format!(
                "stop_criteria '{}' is neither the loss nor a configured metric",
                self.stop_criteria
            )));
        }
        Ok(())
    }

    fn needs_validation(&self) -> bool {
        self.stop_criteria.starts_with("val_")
    }
}

/// Named values recorded at the end of one epoch (`loss`, `val_loss`,
/// `accuracy`, `val_accuracy`, ...).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpochRecord {
    pub values: BTreeMap<String, f64>,
}

impl EpochRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn set(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    /// The series for `name`, or `None` if any epoch lacks it.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        if self.epochs.is_empty() {
            return None;
        }
        self.epochs.iter().map(|e| e.get(name)).collect()
    }

    pub fn has_metric(&self, name: &str) -> bool {
        self.series(name).is_some()
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.get(self.best_epoch)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("history serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let h: TrainingHistory =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("history: {e}")))?;
        if !h.epochs.is_empty() && h.best_epoch >= h.epochs.len() {
            return Err(Error::Format("history: best_epoch out of range".into()));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Waiting,
    Stop,
}

/// Patience counter over a monitored value. Improvement is strict.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    mode: EsMode,
    patience: usize,
    best: Option<f64>,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(mode: EsMode, patience: usize) -> Self {
        EarlyStopping {
            mode,
            patience,
            best: None,
            best_epoch: 0,
            wait: 0,
        }
    }

    /// Stops once more than `patience` consecutive epochs fail to improve.
    pub fn observe(&mut self, epoch: usize, value: f64) -> Verdict {
        let better = match (self.best, self.mode) {
            (None, _) => true,
            (Some(b), EsMode::Min) => value < b,
            (Some(b), EsMode::Max) => value > b,
        };
        if better {
            self.best = Some(value);
            self.best_epoch = epoch;
            self.wait = 0;
            Verdict::Improved
        } else {
            self.wait += 1;
            if self.wait > self.patience {
                Verdict::Stop
            } else {
                Verdict::Waiting
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best
    }
}

/// Callbacks invoked by [`train_with_observer`].
pub trait TrainObserver {
    /// May inspect or overwrite the epoch's recorded values before the
    /// early-stopping decision.
    fn on_epoch_end(&mut self, _epoch: usize, _record: &mut EpochRecord, _net: &DenseNetwork) {}
}

impl TrainObserver for () {}

/// Training data: inputs and encoded targets.
#[derive(Debug, Clone, Copy)]
pub struct Dataset<'a> {
    pub x: &'a Matrix,
    pub y: &'a Matrix,
}

impl<'a> Dataset<'a> {
    pub fn new(x: &'a Matrix, y: &'a Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::invalid(format!(
                "{} samples but {} target rows",
                x.rows(),
                y.rows()
            )));
        }
        Ok(Dataset { x, y })
    }
}

/// One-hot (or single 0/1 column when `units == 1`) targets from labels.
pub fn encode_targets(labels: &[usize], units: usize) -> Result<Matrix> {
    if labels.is_empty() {
        return Err(Error::invalid("no labels to encode"));
    }
    if units == 1 {
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::invalid(format!(
                "label {bad} invalid for a single binary output"
            )));
        }
        return Matrix::from_vec(labels.len(), 1, labels.iter().map(|&l| l as f64).collect());
    }
    let mut data = vec![0.0; labels.len() * units];
    for (i, &l) in labels.iter().enumerate() {
        if l >= units {
            return Err(Error::invalid(format!(
                "label {l} out of range for {units} output units"
            )));
        }
        data[i * units + l] = 1.0;
    }
    Matrix::from_vec(labels.len(), units, data)
}

enum Optimizer {
    Adam {
        m: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        step: i32,
    },
    Sgd,
}

impl Optimizer {
    fn new(kind: OptimizerKind, net: &DenseNetwork) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => {
                let zeros: Vec<Vec<f64>> = net
                    .parameters()
                    .iter()
                    .map(|p| vec![0.0; p.len()])
                    .collect();
                Optimizer::Adam {
                    m: zeros.clone(),
                    v: zeros,
                    step: 0,
                }
            }
        }
    }

    fn apply(&mut self, net: &mut DenseNetwork, grads: &[Vec<f64>], lr: f64) {
        let mut params = net.parameters_mut();
        match self {
            Optimizer::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (w, gw) in p.iter_mut().zip(g) {
                        *w -= lr * gw;
                    }
                }
            }
            Optimizer::Adam { m, v, step } => {
                *step += 1;
                let bc1 = 1.0 - ADAM_BETA1.powi(*step);
                let bc2 = 1.0 - ADAM_BETA2.powi(*step);
                for (((p, g), ms), vs) in params.iter_mut().zip(grads).zip(m).zip(v) {
                    for (((w, &gw), mw), vw) in p.iter_mut().zip(g).zip(ms).zip(vs) {
                        *mw = ADAM_BETA1 * *mw + (1.0 - ADAM_BETA1) * gw;
                        *vw = ADAM_BETA2 * *vw + (1.0 - ADAM_BETA2) * gw * gw;
                        let m_hat = *mw / bc1;
                        let v_hat = *vw / bc2;
                        *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                    }
                }
            }
        }
    }
}

pub fn train(
    net: &mut DenseNetwork,
    train: Dataset<'_>,
    val: Option<Dataset<'_>>,
    cfg: &TrainConfig,
) -> Result<TrainingHistory> {
    train_with_observer(net, train, val, cfg, &mut ())
}

/// Mini-batch training with per-epoch seeded shuffling and early stopping.
/// The parameters of the best epoch are restored before returning.
pub fn train_with_observer(
    net: &mut DenseNetwork,
    train: Dataset<'_>,
    val: Option<Dataset<'_>>,
    cfg: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainingHistory> {
    cfg.validate()?;
    if net.layers().is_empty() {
        return Err(Error::invalid("network has no layers"));
    }
    let expected_in = net.input_dim();
    let out_dim = net.output_dim();
    for (name, d) in std::iter::once(("training", Some(train))).chain([("validation", val)]) {
        let Some(d) = d else { continue };
        if d.x.cols() != expected_in {
            return Err(Error::invalid(format!(
                "{name} data width {} does not match network input {expected_in}",
                d.x.cols()
            )));
        }
        if d.y.cols() != out_dim || d.x.rows() != d.y.rows() {
            return Err(Error::invalid(format!(
                "{name} targets have shape {:?}, expected ({}, {out_dim})",
                d.y.shape(),
                d.x.rows()
            )));
        }
    }
    if cfg.needs_validation() && val.is_none() {
        return Err(Error::invalid(format!(
            "stop_criteria '{}' needs validation data",
            cfg.stop_criteria
        )));
    }

    let mut rng = Rng::new(cfg.seed);
    let mut optimizer = Optimizer::new(cfg.optimizer, net);
    let mut stopper = EarlyStopping::new(cfg.es_mode, cfg.es_patience);
    let mut best_layers: Vec<DenseLayer> = net.layers().to_vec();
    let mut history = TrainingHistory::default();
    let n = train.x.rows();

    for epoch in 0..cfg.epochs {
        let order = rng.permutation(n);
        let mut loss_sum = 0.0;
        let mut metric_sums = vec![0.0; cfg.metrics.len()];
        for batch in order.chunks(cfg.batch_size) {
            let xb = train.x.select_rows(batch)?;
            let yb = train.y.select_rows(batch)?;
            let (loss, grads, out, stats) = net.train_pass(&xb, &yb, cfg.loss, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch: epoch + 1 });
            }
            let w = batch.len() as f64;
            loss_sum += loss * w;
            for (acc, m) in metric_sums.iter_mut().zip(&cfg.metrics) {
                *acc += m.evaluate(&out, &yb) * w;
            }
            optimizer.apply(net, &grads.slices, cfg.learn_rate);
            net.update_running_stats(stats);
            if !net.parameters_finite() {
                return Err(Error::Divergence { epoch: epoch + 1 });
            }
        }

        let mut record = EpochRecord::default();
        record.set("loss", loss_sum / n as f64);
        for (m, s) in cfg.metrics.iter().zip(&metric_sums) {
            record.set(m.name(), s / n as f64);
        }
        if let Some(v) = val {
            let pred = net.predict(v.x)?;
            let val_loss = super::loss::loss_value(cfg.loss, &pred, v.y, net.l2_penalty())?;
            if !val_loss.is_finite() {
                return Err(Error::Divergence { epoch: epoch + 1 });
            }
            record.set("val_loss", val_loss);
            for m in &cfg.metrics {
                record.set(&format!("val_{}", m.name()), m.evaluate(&pred, v.y));
            }
        }
        observer.on_epoch_end(epoch, &mut record, net);

        let monitored = record.get(&cfg.stop_criteria).ok_or_else(|| {
            Error::invalid(format!("metric '{}' was not recorded", cfg.stop_criteria))
        })?;
        if monitored.is_nan() {
            return Err(Error::Divergence { epoch: epoch + 1 });
        }
        if cfg.verbose > 0 {
            let parts: Vec<String> = record
                .values
                .iter()
                .map(|(k, v)| format!("{k}={v:.6}"))
                .collect();
            eprintln!("epoch {}/{}: {}", epoch + 1, cfg.epochs, parts.join(" "));
        }
        history.epochs.push(record);

        match stopper.observe(epoch, monitored) {
            Verdict::Improved => best_layers = net.layers().to_vec(),
            Verdict::Waiting => {}
            Verdict::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }

    history.best_epoch = stopper.best_epoch();
    net.restore_layers(best_layers);
    Ok(history)
}

impl DenseNetwork {
    pub(crate) fn restore_layers(&mut self, layers: Vec<DenseLayer>) {
        debug_assert_eq!(layers.len(), self.layers().len());
        *self.layers_mut() = layers;
    }
}
