use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::par;

/// Population variance (divisor `rows`) of every column. Columns whose
/// entries are all identical report exactly 0.
pub fn column_variance(x: &Matrix) -> Vec<f64> {
    let (n, p) = x.shape();
    let means = x.column_means();
    par::map_range(p, n * p, |j| {
        let first = x.get(0, j);
        if (1..n).all(|i| x.get(i, j) == first) {
            return 0.0;
        }
        let m = means[j];
        let ss: f64 = (0..n).map(|i| (x.get(i, j) - m).powi(2)).sum();
        ss / n as f64
    })
}

/// Population standard deviation of every column.
pub fn column_std(x: &Matrix) -> Vec<f64> {
    column_variance(x).into_iter().map(f64::sqrt).collect()
}

/// Percentile `p` (in percent) of `values` by linear interpolation between
/// the order statistics bracketing position `p/100 · (n − 1)`.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::invalid(format!("percentile {p} outside [0, 100]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("percentile of non-finite values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Ok(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Column-wise affine preprocessing fitted on one matrix and applied to others.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// `None` when only centering was requested. Zero entries mean "leave as is".
    pub scale: Option<Vec<f64>>,
}

impl Scaler {
    /// Centers on `x`'s column means; with `unit`, also divides by the
    /// population standard deviation of columns whose deviation is nonzero.
    pub fn fit(x: &Matrix, unit: bool) -> Scaler {
        let mean = x.column_means();
        let scale = unit.then(|| column_std(x));
        Scaler { mean, scale }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.width() {
            return Err(Error::invalid(format!(
                "scaler fitted on width {}, got {}",
                self.width(),
                x.cols()
            )));
        }
        let mut out = x.clone();
        let cols = x.cols();
        for (idx, v) in out.as_mut_slice().iter_mut().enumerate() {
            let j = idx % cols;
            *v -= self.mean[j];
            if let Some(scale) = &self.scale {
                if scale[j] > 0.0 {
                    *v /= scale[j];
                }
            }
        }
        Ok(out)
    }
}
