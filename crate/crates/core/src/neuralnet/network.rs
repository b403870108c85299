use serde::{Deserialize, Serialize};

use super::layer::{Activation, BatchNormParams, DenseLayer, LayerSpec};
use super::loss::{loss_and_grad, LossKind};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics for batch norm, inverted dropout active.
    Train,
    /// Running statistics, no dropout.
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Binary,
    Categorical,
}

/// Feed-forward stack of dense layers.
#[derive(Debug, Clone)]
pub struct DenseNetwork {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    seed: u64,
    /// Draws weights for layers appended later.
    rng: Rng,
}

/// Compares architecture and parameters; the initialisation stream is ignored.
impl PartialEq for DenseNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.input_dim == other.input_dim && self.seed == other.seed && self.layers == other.layers
    }
}

/// Per-layer intermediate values kept for backpropagation.
struct LayerCache {
    input: Matrix,
    pre_bn: Option<BnCache>,
    pre_activation: Matrix,
    activated: Matrix,
    dropout_mask: Option<Vec<f64>>,
}

struct BnCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
}

/// Per-layer batch mean and variance from a training pass (`None` without batch norm).
pub(crate) type BnStats = Vec<Option<(Vec<f64>, Vec<f64>)>>;

/// Gradients laid out like [`DenseNetwork::parameters`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub slices: Vec<Vec<f64>>,
}

impl DenseNetwork {
    /// Empty network over `input_dim` features; layer weights are drawn from
    /// a stream seeded with `seed`.
    pub fn new(input_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("network input width must be positive"));
        }
        Ok(DenseNetwork {
            input_dim,
            layers: Vec::new(),
            seed,
            rng: Rng::new(seed),
        })
    }

    pub fn with_layers(input_dim: usize, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut net = DenseNetwork::new(input_dim, seed)?;
        for spec in specs {
            net.push_layer(spec.clone())?;
        }
        Ok(net)
    }

    /// Appends a freshly initialised layer. Only the last layer may use softmax.
    pub fn push_layer(&mut self, spec: LayerSpec) -> Result<()> {
        if let Some(last) = self.layers.last() {
            if last.spec.activation == Activation::Softmax {
                return Err(Error::invalid(
                    "softmax is only allowed on the output layer",
                ));
            }
        }
        let layer = DenseLayer::new(self.output_dim(), spec, &mut self.rng)?;
        self.layers.push(layer);
        Ok(())
    }

    pub fn pop_layer(&mut self) -> Option<DenseLayer> {
        self.layers.pop()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.units())
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut Vec<DenseLayer> {
        &mut self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.units()).collect()
    }

    pub(crate) fn from_parts(input_dim: usize, layers: Vec<DenseLayer>, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("network input width must be positive"));
        }
        let mut width = input_dim;
        for (i, l) in layers.iter().enumerate() {
            l.spec.validate()?;
            if l.input_dim != width || l.weights.shape() != (width, l.units()) {
                return Err(Error::invalid(format!(
                    "layer {i} does not chain: expects {} inputs, previous width {width}",
                    l.input_dim
                )));
            }
            if l.bias.len() != l.units() {
                return Err(Error::invalid(format!("layer {i} bias has wrong length")));
            }
            match (&l.bn, l.spec.batch_norm) {
                (Some(bn), true) => {
                    let u = l.units();
                    if [&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var]
                        .iter()
                        .any(|v| v.len() != u)
                    {
                        return Err(Error::invalid(format!(
                            "layer {i} batch-norm parameters have wrong length"
                        )));
                    }
                }
                (None, false) => {}
                _ => {
                    return Err(Error::invalid(format!(
                        "layer {i} batch-norm flag and parameters disagree"
                    )))
                }
            }
            if l.spec.activation == Activation::Softmax && i + 1 != layers.len() {
                return Err(Error::invalid(
                    "softmax is only allowed on the output layer",
                ));
            }
            width = l.units();
        }
        Ok(DenseNetwork {
            input_dim,
            layers,
            seed,
            rng: Rng::new(seed),
        })
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.weights.as_slice());
            out.push(l.bias.as_slice());
            if let Some(bn) = &l.bn {
                out.push(bn.gamma.as_slice());
                out.push(bn.beta.as_slice());
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(l.weights.as_mut_slice());
            out.push(l.bias.as_mut_slice());
            if let Some(bn) = &mut l.bn {
                out.push(bn.gamma.as_mut_slice());
                out.push(bn.beta.as_mut_slice());
            }
        }
        out
    }

    pub fn parameters_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.is_all_finite()
                && l.bias.iter().all(|v| v.is_finite())
                && l.bn.as_ref().is_none_or(|bn| {
                    bn.gamma
                        .iter()
                        .chain(&bn.beta)
                        .chain(&bn.running_mean)
                        .chain(&bn.running_var)
                        .all(|v| v.is_finite())
                })
        })
    }

    pub fn l2_penalty(&self) -> f64 {
        self.layers.iter().map(DenseLayer::l2_penalty).sum()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("network has no layers"));
        }
        if x.cols() != self.input_dim {
            return Err(Error::invalid(format!(
                "input width mismatch: network expects {} features, got {}",
                self.input_dim,
                x.cols()
            )));
        }
        Ok(())
    }

    /// Post-activation output of every layer. Train mode without an RNG
    /// skips dropout.
    pub fn forward(&self, x: &Matrix, mode: Mode) -> Result<Vec<Matrix>> {
        self.check_input(x)?;
        let caches = self.forward_cached(x, mode, None);
        Ok(caches.into_iter().map(|c| c.output()).collect())
    }

    /// Output of the last layer in inference mode.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self
            .forward(x, Mode::Infer)?
            .pop()
            .expect("non-empty network"))
    }

    pub fn predict_classes(&self, x: &Matrix, task: Task) -> Result<Vec<usize>> {
        let out = self.predict(x)?;
        match (task, out.cols()) {
            (Task::Binary, 1) => Ok(binary_labels(&out)),
            (Task::Binary, w) => Err(Error::invalid(format!(
                "binary task needs 1 output unit, network has {w}"
            ))),
            (Task::Categorical, w) if w >= 2 => Ok(argmax_rows(&out)),
            (Task::Categorical, w) => Err(Error::invalid(format!(
                "categorical task needs ≥2 output units, network has {w}"
            ))),
        }
    }

    fn forward_cached(&self, x: &Matrix, mode: Mode, mut rng: Option<&mut Rng>) -> Vec<LayerCache> {
        let mut caches: Vec<LayerCache> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = caches.last().map_or_else(|| x.clone(), LayerCache::output);
            let mut z = input.matmul_unchecked(&layer.weights);
            add_row_vector(&mut z, &layer.bias);

            let (pre_activation, pre_bn) = match &layer.bn {
                None => (z, None),
                Some(bn) => match mode {
                    Mode::Infer => {
                        let inv_std: Vec<f64> = bn
                            .running_var
                            .iter()
                            .map(|v| 1.0 / (v + BatchNormParams::EPSILON).sqrt())
                            .collect();
                        let normalized = normalize(&z, &bn.running_mean, &inv_std);
                        (scale_shift(&normalized, &bn.gamma, &bn.beta), None)
                    }
                    Mode::Train => {
                        let batch_mean = z.column_means();
                        let batch_var = column_var_biased(&z, &batch_mean);
                        let inv_std: Vec<f64> = batch_var
                            .iter()
                            .map(|v| 1.0 / (v + BatchNormParams::EPSILON).sqrt())
                            .collect();
                        let normalized = normalize(&z, &batch_mean, &inv_std);
                        let h = scale_shift(&normalized, &bn.gamma, &bn.beta);
                        (
                            h,
                            Some(BnCache {
                                normalized,
                                inv_std,
                                batch_mean,
                                batch_var,
                            }),
                        )
                    }
                },
            };

            let activated = layer.spec.activation.apply(&pre_activation);
            let rate = layer.spec.dropout_rate;
            let dropout_mask = match (&mut rng, mode) {
                (Some(r), Mode::Train) if rate > 0.0 => {
                    let keep = 1.0 / (1.0 - rate);
                    Some(
                        (0..activated.as_slice().len())
                            .map(|_| if r.uniform() < rate { 0.0 } else { keep })
                            .collect(),
                    )
                }
                _ => None,
            };
            caches.push(LayerCache {
                input,
                pre_bn,
                pre_activation,
                activated,
                dropout_mask,
            });
        }
        caches
    }

    /// Training-mode loss (batch statistics, dropout off) and its gradient
    /// with respect to every parameter, L2 penalty included.
    pub fn loss_and_gradients(
        &self,
        x: &Matrix,
        targets: &Matrix,
        loss: LossKind,
    ) -> Result<(f64, Gradients)> {
        self.check_input(x)?;
        let caches = self.forward_cached(x, Mode::Train, None);
        self.backward(&caches, targets, loss)
    }

    /// Training-mode loss without gradients, for finite differences.
    pub fn train_loss(&self, x: &Matrix, targets: &Matrix, loss: LossKind) -> Result<f64> {
        self.check_input(x)?;
        let caches = self.forward_cached(x, Mode::Train, None);
        let out = caches.last().expect("non-empty").output();
        Ok(loss_and_grad(loss, &out, targets, false)?.0 + self.l2_penalty())
    }

    /// One forward/backward pass in train mode with dropout drawn from `rng`.
    /// Returns the loss, gradients and the batch statistics of every
    /// batch-norm layer (mean, variance).
    pub(crate) fn train_pass(
        &self,
        x: &Matrix,
        targets: &Matrix,
        loss: LossKind,
        rng: &mut Rng,
    ) -> Result<(f64, Gradients, Matrix, BnStats)> {
        let caches = self.forward_cached(x, Mode::Train, Some(rng));
        let (value, grads) = self.backward(&caches, targets, loss)?;
        let output = caches.last().expect("non-empty").output();
        let stats = caches
            .into_iter()
            .map(|c| c.pre_bn.map(|b| (b.batch_mean, b.batch_var)))
            .collect();
        Ok((value, grads, output, stats))
    }

    pub(crate) fn update_running_stats(&mut self, stats: BnStats) {
        let m = BatchNormParams::MOMENTUM;
        for (layer, stat) in self.layers.iter_mut().zip(stats) {
            if let (Some(bn), Some((mean, var))) = (layer.bn.as_mut(), stat) {
                for (r, b) in bn.running_mean.iter_mut().zip(&mean) {
                    *r = m * *r + (1.0 - m) * b;
                }
                for (r, b) in bn.running_var.iter_mut().zip(&var) {
                    *r = m * *r + (1.0 - m) * b;
                }
            }
        }
    }

    fn backward(
        &self,
        caches: &[LayerCache],
        targets: &Matrix,
        loss: LossKind,
    ) -> Result<(f64, Gradients)> {
        let out = caches.last().expect("non-empty").output();
        let (data_loss, grad) = loss_and_grad(loss, &out, targets, true)?;
        let mut upstream = grad.expect("gradient requested");
        let mut per_layer: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.layers.len());

        for (layer, cache) in self.layers.iter().zip(caches).rev() {
            if let Some(mask) = &cache.dropout_mask {
                for (g, m) in upstream.as_mut_slice().iter_mut().zip(mask) {
                    *g *= m;
                }
            }
            let d_pre =
                layer
                    .spec
                    .activation
                    .backward(&cache.pre_activation, &cache.activated, &upstream);

            let mut slices = Vec::with_capacity(4);
            let d_z = match (&layer.bn, &cache.pre_bn) {
                (Some(bn), Some(bc)) => {
                    let (d_z, d_gamma, d_beta) = batch_norm_backward(&d_pre, bn, bc);
                    slices.push(d_gamma);
                    slices.push(d_beta);
                    d_z
                }
                _ => d_pre,
            };

            let mut d_w = cache.input.t_matmul(&d_z).into_vec();
            if layer.spec.l2 > 0.0 {
                for (g, w) in d_w.iter_mut().zip(layer.weights.as_slice()) {
                    *g += 2.0 * layer.spec.l2 * w;
                }
            }
            let mut d_b = vec![0.0; layer.units()];
            for row in d_z.row_iter() {
                for (acc, v) in d_b.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            upstream = d_z.matmul_t(&layer.weights);

            let mut ordered = vec![d_w, d_b];
            ordered.extend(slices);
            per_layer.push(ordered);
        }

        per_layer.reverse();
        let slices = per_layer.into_iter().flatten().collect();
        Ok((data_loss + self.l2_penalty(), Gradients { slices }))
    }
}

impl LayerCache {
    fn output(&self) -> Matrix {
        match &self.dropout_mask {
            None => self.activated.clone(),
            Some(mask) => {
                let mut out = self.activated.clone();
                for (v, m) in out.as_mut_slice().iter_mut().zip(mask) {
                    *v *= m;
                }
                out
            }
        }
    }
}

fn add_row_vector(z: &mut Matrix, v: &[f64]) {
    let cols = z.cols();
    for row in z.as_mut_slice().chunks_exact_mut(cols) {
        for (x, b) in row.iter_mut().zip(v) {
            *x += b;
        }
    }
}

fn column_var_biased(z: &Matrix, mean: &[f64]) -> Vec<f64> {
    let mut var = vec![0.0; z.cols()];
    for row in z.row_iter() {
        for ((acc, v), m) in var.iter_mut().zip(row).zip(mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let n = z.rows() as f64;
    var.iter_mut().for_each(|v| *v /= n);
    var
}

fn normalize(z: &Matrix, mean: &[f64], inv_std: &[f64]) -> Matrix {
    let mut out = z.clone();
    let cols = z.cols();
    for row in out.as_mut_slice().chunks_exact_mut(cols) {
        for ((x, m), s) in row.iter_mut().zip(mean).zip(inv_std) {
            *x = (*x - m) * s;
        }
    }
    out
}

fn scale_shift(x: &Matrix, gamma: &[f64], beta: &[f64]) -> Matrix {
    let mut out = x.clone();
    let cols = x.cols();
    for row in out.as_mut_slice().chunks_exact_mut(cols) {
        for ((v, g), b) in row.iter_mut().zip(gamma).zip(beta) {
            *v = *v * g + b;
        }
    }
    out
}

fn batch_norm_backward(
    d_h: &Matrix,
    bn: &BatchNormParams,
    cache: &BnCache,
) -> (Matrix, Vec<f64>, Vec<f64>) {
    let (n, u) = d_h.shape();
    let nf = n as f64;
    let mut d_gamma = vec![0.0; u];
    let mut d_beta = vec![0.0; u];
    // Σ dx̂ and Σ dx̂·x̂ per feature
    let mut sum_dxhat = vec![0.0; u];
    let mut sum_dxhat_xhat = vec![0.0; u];
    for (drow, xrow) in d_h.row_iter().zip(cache.normalized.row_iter()) {
        for j in 0..u {
            d_gamma[j] += drow[j] * xrow[j];
            d_beta[j] += drow[j];
            let dx = drow[j] * bn.gamma[j];
            sum_dxhat[j] += dx;
            sum_dxhat_xhat[j] += dx * xrow[j];
        }
    }
    let mut d_z = vec![0.0; n * u];
    for (i, (drow, xrow)) in d_h.row_iter().zip(cache.normalized.row_iter()).enumerate() {
        for j in 0..u {
            let dx = drow[j] * bn.gamma[j];
            d_z[i * u + j] =
                cache.inv_std[j] / nf * (nf * dx - sum_dxhat[j] - xrow[j] * sum_dxhat_xhat[j]);
        }
    }
    (Matrix::from_parts(n, u, d_z), d_gamma, d_beta)
}

/// 1 where the single output is at least 0.5.
pub fn binary_labels(out: &Matrix) -> Vec<usize> {
    out.as_slice()
        .iter()
        .map(|&p| usize::from(p >= 0.5))
        .collect()
}

/// Row-wise argmax; ties go to the lower column.
pub fn argmax_rows(out: &Matrix) -> Vec<usize> {
    out.row_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0, |best, (j, &v)| if v > row[best] { j } else { best })
        })
        .collect()
}
