use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
    Linear,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Softmax,
        Activation::Linear,
    ];

    /// Applies the activation to every row of `h`.
    pub fn apply(self, h: &Matrix) -> Matrix {
        let mut out = h.clone();
        let cols = h.cols();
        let data = out.as_mut_slice();
        match self {
            Activation::Relu => data.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Sigmoid => data.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Tanh => data.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Linear => {}
            Activation::Softmax => {
                for row in data.chunks_exact_mut(cols) {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    row.iter_mut().for_each(|v| *v /= sum);
                }
            }
        }
        out
    }

    /// Gradient with respect to the pre-activation `h`, given the activation
    /// output `y` and the upstream gradient `dy`.
    pub fn backward(self, h: &Matrix, y: &Matrix, dy: &Matrix) -> Matrix {
        let cols = h.cols();
        let mut dh = dy.clone();
        let out = dh.as_mut_slice();
        let hs = h.as_slice();
        let ys = y.as_slice();
        match self {
            Activation::Relu => {
                for (d, &hv) in out.iter_mut().zip(hs) {
                    if hv <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            Activation::Sigmoid => {
                for (d, &yv) in out.iter_mut().zip(ys) {
                    *d *= yv * (1.0 - yv);
                }
            }
            Activation::Tanh => {
                for (d, &yv) in out.iter_mut().zip(ys) {
                    *d *= 1.0 - yv * yv;
                }
            }
            Activation::Linear => {}
            Activation::Softmax => {
                for (drow, yrow) in out.chunks_exact_mut(cols).zip(ys.chunks_exact(cols)) {
                    let dot: f64 = drow.iter().zip(yrow).map(|(d, y)| d * y).sum();
                    for (d, &yv) in drow.iter_mut().zip(yrow) {
                        *d = yv * (*d - dot);
                    }
                }
            }
        }
        dh
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    HeNormal,
    GlorotUniform,
}

impl Init {
    pub fn sample(self, fan_in: usize, fan_out: usize, rng: &mut Rng) -> f64 {
        match self {
            Init::HeNormal => rng.normal() * (2.0 / fan_in as f64).sqrt(),
            Init::GlorotUniform => {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                rng.uniform_range(-limit, limit)
            }
        }
    }
}

/// Hyperparameters of one dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
    #[serde(default)]
    pub dropout_rate: f64,
    #[serde(default)]
    pub batch_norm: bool,
    #[serde(default)]
    pub l2: f64,
    #[serde(default)]
    pub init: Init,
}

impl LayerSpec {
    pub fn new(units: usize, activation: Activation) -> Self {
        LayerSpec {
            units,
            activation,
            dropout_rate: 0.0,
            batch_norm: false,
            l2: 0.0,
            init: Init::HeNormal,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    pub fn with_batch_norm(mut self, on: bool) -> Self {
        self.batch_norm = on;
        self
    }

    pub fn with_l2(mut self, l2: f64) -> Self {
        self.l2 = l2;
        self
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.units == 0 {
            return Err(Error::invalid("layer must have at least one unit"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::invalid(format!("l2 factor {} must be ≥ 0", self.l2)));
        }
        Ok(())
    }
}

/// Per-feature batch normalisation parameters and running statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNormParams {
    pub const MOMENTUM: f64 = 0.9;
    pub const EPSILON: f64 = 1e-5;

    pub fn new(units: usize) -> Self {
        BatchNormParams {
            gamma: vec![1.0; units],
            beta: vec![0.0; units],
            running_mean: vec![0.0; units],
            running_var: vec![1.0; units],
        }
    }
}

/// A dense layer: affine map, optional batch norm, activation, dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub spec: LayerSpec,
    pub input_dim: usize,
    /// `input_dim × units`, row-major.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bn: Option<BatchNormParams>,
}

impl DenseLayer {
    pub fn new(input_dim: usize, spec: LayerSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        if input_dim == 0 {
            return Err(Error::invalid("layer input width must be positive"));
        }
        let units = spec.units;
        let weights = Matrix::from_fn(input_dim, units, |_, _| {
            spec.init.sample(input_dim, units, rng)
        })?;
        let bn = spec.batch_norm.then(|| BatchNormParams::new(units));
        Ok(DenseLayer {
            spec,
            input_dim,
            weights,
            bias: vec![0.0; units],
            bn,
        })
    }

    pub fn units(&self) -> usize {
        self.spec.units
    }

    pub fn l2_penalty(&self) -> f64 {
        if self.spec.l2 == 0.0 {
            return 0.0;
        }
        self.spec.l2 * self.weights.as_slice().iter().map(|w| w * w).sum::<f64>()
    }
}
