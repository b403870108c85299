use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Probabilities are clamped into `[PROB_CLAMP, 1 − PROB_CLAMP]` before
/// taking logarithms.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    BinaryCrossentropy,
    CategoricalCrossentropy,
    Mse,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [
        LossKind::BinaryCrossentropy,
        LossKind::CategoricalCrossentropy,
        LossKind::Mse,
    ];
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary_crossentropy" => Ok(LossKind::BinaryCrossentropy),
            "categorical_crossentropy" => Ok(LossKind::CategoricalCrossentropy),
            "mse" => Ok(LossKind::Mse),
            other => Err(Error::invalid(format!("unknown loss kind '{other}'"))),
        }
    }
}

fn clamp_prob(p: f64) -> (f64, bool) {
    if p < PROB_CLAMP {
        (PROB_CLAMP, false)
    } else if p > 1.0 - PROB_CLAMP {
        (1.0 - PROB_CLAMP, false)
    } else {
        (p, true)
    }
}

fn check_shapes(pred: &Matrix, target: &Matrix) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::invalid(format!(
            "prediction shape {:?} does not match target shape {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    Ok(())
}

/// Mean per-sample loss plus the supplied L2 penalty.
///
/// Per sample, binary cross-entropy and MSE average over output units and
/// categorical cross-entropy sums over classes.
pub fn loss_value(kind: LossKind, pred: &Matrix, target: &Matrix, l2_terms: f64) -> Result<f64> {
    Ok(loss_and_grad(kind, pred, target, false)?.0 + l2_terms)
}

/// Data loss and its gradient with respect to the predictions.
pub(crate) fn loss_and_grad(
    kind: LossKind,
    pred: &Matrix,
    target: &Matrix,
    with_grad: bool,
) -> Result<(f64, Option<Matrix>)> {
    check_shapes(pred, target)?;
    let (n, k) = pred.shape();
    let nf = n as f64;
    let kf = k as f64;
    let mut total = 0.0;
    let mut grad = with_grad.then(|| vec![0.0; n * k]);
    for (idx, (&p, &t)) in pred.as_slice().iter().zip(target.as_slice()).enumerate() {
        let (value, g) = match kind {
            LossKind::BinaryCrossentropy => {
                let (pc, inside) = clamp_prob(p);
                let v = -(t * pc.ln() + (1.0 - t) * (1.0 - pc).ln()) / kf;
                let g = if inside {
                    (-t / pc + (1.0 - t) / (1.0 - pc)) / kf
                } else {
                    0.0
                };
                (v, g)
            }
            LossKind::CategoricalCrossentropy => {
                let (pc, inside) = clamp_prob(p);
                let v = -t * pc.ln();
                let g = if inside { -t / pc } else { 0.0 };
                (v, g)
            }
            LossKind::Mse => {
                let d = p - t;
                (d * d / kf, 2.0 * d / kf)
            }
        };
        total += value;
        if let Some(gv) = grad.as_mut() {
            gv[idx] = g / nf;
        }
    }
    Ok((total / nf, grad.map(|g| Matrix::from_parts(n, k, g))))
}
