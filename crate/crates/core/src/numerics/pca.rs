use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Singular values below this fraction of the largest one count as zero rank.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Principal components of column-centered data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// One unit-norm direction per row, ordered by decreasing variance.
    components: Vec<Vec<f64>>,
    singular_values: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
    n_samples: usize,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn explained_variance_ratio(&self) -> &[f64] {
        &self.explained_variance_ratio
    }

    /// Sample-covariance eigenvalues `s² / (rows − 1)`.
    pub fn explained_variance(&self) -> Vec<f64> {
        let denom = (self.n_samples - 1) as f64;
        self.singular_values.iter().map(|s| s * s / denom).collect()
    }

    /// Smallest `k` whose cumulative explained-variance ratio reaches
    /// `threshold`, clamped to `[1, n_components]` (and to 1 when no
    /// component survived).
    pub fn n_components_for_variance(&self, threshold: f64) -> Result<usize> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "variance threshold out of range: {threshold} not in (0, 1]"
            )));
        }
        let mut cumulative = 0.0;
        for (i, r) in self.explained_variance_ratio.iter().enumerate() {
            cumulative += r;
            if cumulative >= threshold - 1e-12 {
                return Ok(i + 1);
            }
        }
        Ok(self.n_components().max(1))
    }

    /// Projects `(x − mean)` onto the first `k` components.
    pub fn transform(&self, x: &Matrix, k: usize) -> Result<Matrix> {
        if x.cols() != self.n_features() {
            return Err(Error::invalid(format!(
                "PCA fitted on {} features, got {}",
                self.n_features(),
                x.cols()
            )));
        }
        if k == 0 || k > self.n_components() {
            return Err(Error::invalid(format!(
                "requested {k} components, model has {}",
                self.n_components()
            )));
        }
        let mut out = Vec::with_capacity(x.rows() * k);
        let mut centered = vec![0.0; x.cols()];
        for row in x.row_iter() {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = v - m;
            }
            for comp in &self.components[..k] {
                out.push(comp.iter().zip(&centered).map(|(a, b)| a * b).sum());
            }
        }
        Ok(Matrix::from_parts(x.rows(), k, out))
    }

    /// Maps projected coordinates back to feature space.
    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix> {
        let k = z.cols();
        if k > self.n_components() {
            return Err(Error::invalid(format!(
                "{k} projected coordinates, model has {} components",
                self.n_components()
            )));
        }
        let p = self.n_features();
        let mut out = Vec::with_capacity(z.rows() * p);
        for row in z.row_iter() {
            for j in 0..p {
                let v: f64 = (0..k).map(|c| row[c] * self.components[c][j]).sum();
                out.push(v + self.mean[j]);
            }
        }
        Ok(Matrix::from_parts(z.rows(), p, out))
    }
}

/// PCA by singular value decomposition of the column-centered data.
///
/// Keeps at most `min(rows − 1, cols)` components and drops singular values
/// below `RANK_TOLERANCE · s_max`. Each component's largest-magnitude entry is
/// made nonnegative.
pub fn fit_pca(x: &Matrix) -> Result<PcaModel> {
    let (n, p) = x.shape();
    if n < 2 {
        return Err(Error::invalid("insufficient samples for PCA"));
    }
    let mean = x.column_means();
    let centered = DMatrix::from_fn(n, p, |i, j| x.get(i, j) - mean[j]);
    let (s, v) = right_singular_pairs(centered);

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let total: f64 = s.iter().map(|v| v * v).sum();
    let s_max = order.first().map(|&i| s[i]).unwrap_or(0.0);
    let max_k = (n - 1).min(p);

    let mut components = Vec::new();
    let mut singular_values = Vec::new();
    let mut ratios = Vec::new();
    if s_max > 0.0 && total > 0.0 {
        for &idx in order.iter().take(max_k) {
            if s[idx] < RANK_TOLERANCE * s_max {
                break;
            }
            let mut comp: Vec<f64> = v.column(idx).iter().copied().collect();
            let norm = comp.iter().map(|v| v * v).sum::<f64>().sqrt();
            comp.iter_mut().for_each(|v| *v /= norm);
            let lead =
                comp.iter().enumerate().fold(
                    0,
                    |best, (j, v)| if v.abs() > comp[best].abs() { j } else { best },
                );
            if comp[lead] < 0.0 {
                comp.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(comp);
            singular_values.push(s[idx]);
            ratios.push(s[idx] * s[idx] / total);
        }
    }

    Ok(PcaModel {
        mean,
        components,
        singular_values,
        explained_variance_ratio: ratios,
        n_samples: n,
    })
}

/// Singular values of `a` with the matching right singular vectors as
/// columns. A Householder QR first reduces the problem to a square factor,
/// which one-sided Jacobi then diagonalises; nalgebra's bidiagonal SVD lost
/// around 1e-5 relative accuracy on small nearly rank-deficient inputs.
fn right_singular_pairs(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (n, p) = a.shape();
    if n >= p {
        // a = QR, so a and R share right singular vectors.
        jacobi_svd(a.qr().r())
    } else {
        // aᵀ = QR gives a = Rᵀ Qᵀ; right vectors of a are Q times those of Rᵀ.
        let qr = a.transpose().qr();
        let (q, r) = (qr.q(), qr.r());
        let (s, w) = jacobi_svd(r.transpose());
        (s, q * w)
    }
}

/// One-sided (Hestenes) Jacobi on a square matrix: rotates column pairs
/// until all are orthogonal; column norms are then the singular values and
/// the accumulated rotations the right singular vectors.
fn jacobi_svd(mut m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    const MAX_SWEEPS: usize = 80;
    let k = m.ncols();
    let mut v = DMatrix::<f64>::identity(k, k);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in i + 1..k {
                let (alpha, beta, gamma) = {
                    let (ci, cj) = (m.column(i), m.column(j));
                    (ci.norm_squared(), cj.norm_squared(), ci.dot(&cj))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut m, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let s = (0..k).map(|j| m.column(j).norm()).collect();
    (s, v)
}

fn rotate(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (a, b) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * a - s * b;
        m[(r, j)] = s * a + c * b;
    }
}

/// Convenience wrapper over [`PcaModel::n_components_for_variance`].
pub fn n_components_for_variance(model: &PcaModel, threshold: f64) -> Result<usize> {
    model.n_components_for_variance(threshold)
}

/// Convenience wrapper over [`PcaModel::transform`].
pub fn transform_pca(model: &PcaModel, x: &Matrix, k: usize) -> Result<Matrix> {
    model.transform(x, k)
}
