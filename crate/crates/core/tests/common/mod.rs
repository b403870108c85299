//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use densecascade::neuralnet::{Activation, DenseNetwork, Init, LayerSpec, LossKind};
use densecascade::numerics::{Matrix, Rng};

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Sample covariance (divisor n − 1) computed directly from the definition.
pub fn covariance(x: &Matrix) -> Vec<Vec<f64>> {
    let (n, p) = x.shape();
    let mean: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    let mut c = vec![vec![0.0; p]; p];
    for a in 0..p {
        for b in 0..p {
            c[a][b] = (0..n)
                .map(|i| (x.get(i, a) - mean[a]) * (x.get(i, b) - mean[b]))
                .sum::<f64>()
                / (n - 1) as f64;
        }
    }
    c
}

/// Explained-variance ratios from the covariance spectrum, truncated to
/// `keep` components.
pub fn oracle_ratios(x: &Matrix, keep: usize) -> Vec<f64> {
    let ev = jacobi_eigenvalues(&covariance(x));
    let total: f64 = ev.iter().map(|v| v.max(0.0)).sum();
    ev.iter().take(keep).map(|v| v.max(0.0) / total).collect()
}

/// Cumulative-sum rule for the number of components reaching `threshold`.
pub fn oracle_k(ratios: &[f64], threshold: f64) -> usize {
    let mut acc = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        acc += r;
        if acc >= threshold - 1e-12 {
            return i + 1;
        }
    }
    ratios.len().max(1)
}

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.normal()).unwrap()
}

/// Worst relative discrepancy between analytic gradients and central
/// differences with step `h`, using `max(|a|, |n|, floor)` as denominator.
pub fn gradient_check(
    net: &DenseNetwork,
    x: &Matrix,
    t: &Matrix,
    loss: LossKind,
    h: f64,
    floor: f64,
) -> f64 {
    let (_, grads) = net.loss_and_gradients(x, t, loss).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    let shapes: Vec<usize> = net.parameters().iter().map(|p| p.len()).collect();
    for (s, &len) in shapes.iter().enumerate() {
        for i in 0..len {
            let orig = probe.parameters()[s][i];
            probe.parameters_mut()[s][i] = orig + h;
            let up = probe.train_loss(x, t, loss).unwrap();
            probe.parameters_mut()[s][i] = orig - h;
            let down = probe.train_loss(x, t, loss).unwrap();
            probe.parameters_mut()[s][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.slices[s][i];
            let denom = analytic.abs().max(numeric.abs()).max(floor);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    worst
}

/// Random small network: up to 3 layers of at most 8 units, the given
/// output activation, optional L2 on every layer, every parameter jittered.
pub fn random_network(
    rng: &mut Rng,
    input_dim: usize,
    output_units: usize,
    out_act: Activation,
    l2: f64,
    batch_norm: bool,
) -> DenseNetwork {
    let hidden_acts = [
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Linear,
    ];
    let hidden = rng.below(3);
    let mut specs = Vec::new();
    for _ in 0..hidden {
        let act = hidden_acts[rng.below(hidden_acts.len())];
        let init = if rng.below(2) == 0 {
            Init::HeNormal
        } else {
            Init::GlorotUniform
        };
        specs.push(
            LayerSpec::new(1 + rng.below(8), act)
                .with_l2(l2)
                .with_init(init)
                .with_batch_norm(batch_norm),
        );
    }
    specs.push(LayerSpec::new(output_units, out_act).with_l2(l2));
    let mut net = DenseNetwork::with_layers(input_dim, &specs, rng.next_u64()).unwrap();
    // Fresh biases are exactly zero, which can park an output on a
    // non-differentiable point (a dead relu layer feeding a clamped loss).
    for slice in net.parameters_mut() {
        for v in slice.iter_mut() {
            *v += 0.1 * rng.normal();
        }
    }
    net
}

/// Targets matching the loss: one-hot rows for categorical cross-entropy,
/// 0/1 entries for binary cross-entropy, real values for MSE.
pub fn random_targets(rng: &mut Rng, rows: usize, units: usize, loss: LossKind) -> Matrix {
    match loss {
        LossKind::CategoricalCrossentropy => Matrix::from_fn(rows, units, {
            let hot: Vec<usize> = (0..rows).map(|_| rng.below(units)).collect();
            move |i, j| if hot[i] == j { 1.0 } else { 0.0 }
        })
        .unwrap(),
        LossKind::BinaryCrossentropy => {
            Matrix::from_fn(rows, units, |_, _| rng.below(2) as f64).unwrap()
        }
        LossKind::Mse => Matrix::from_fn(rows, units, |_, _| rng.normal()).unwrap(),
    }
}

/// Population variance of each column, straight from the definition.
pub fn reference_variances(x: &Matrix) -> Vec<f64> {
    let (n, p) = x.shape();
    (0..p)
        .map(|j| {
            let m = (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64;
            (0..n).map(|i| (x.get(i, j) - m).powi(2)).sum::<f64>() / n as f64
        })
        .collect()
}

/// Linear-interpolation percentile (`p` in percent) of a sample.
pub fn reference_percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Adaptive variance threshold: keep columns whose variance reaches the
/// `p`-th percentile of all column variances.
pub fn reference_avt(x: &Matrix, p: f64) -> Vec<usize> {
    let var = reference_variances(x);
    let cut = reference_percentile(&var, p);
    (0..var.len()).filter(|&j| var[j] >= cut).collect()
}

/// Indices of the `k` largest scores (ties to the lower index), ascending.
pub fn reference_top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps lower indices first among equal scores
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut top = idx[..k].to_vec();
    top.sort();
    top
}

/// Creates `root/<class>/file_<i>.txt` for every `(class, count)` pair; each
/// file holds its own relative path.
pub fn class_tree(root: &Path, classes: &[(String, usize)]) {
    for (class, n) in classes {
        let dir = root.join(class);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..*n {
            let name = format!("file_{i:03}.txt");
            fs::write(dir.join(&name), format!("{class}/{name}")).unwrap();
        }
    }
}

/// Class directory → set of file names, for a one-level tree.
pub fn scan_tree(root: &Path) -> BTreeMap<String, BTreeSet<String>> {
    let mut out = BTreeMap::new();
    if !root.exists() {
        return out;
    }
    for entry in fs::read_dir(root).unwrap() {
        let entry = entry.unwrap();
        if !entry.file_type().unwrap().is_dir() {
            continue;
        }
        let files = fs::read_dir(entry.path())
            .unwrap()
            .map(|f| f.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        out.insert(entry.file_name().to_string_lossy().into_owned(), files);
    }
    out
}

/// Every file under `root` (relative path → bytes).
pub fn snapshot_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(base).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Writes `x`/`labels` as a CSV with feature columns `f0..` and a final
/// `label` column.
pub fn write_csv(path: &Path, x: &Matrix, labels: &[String]) {
    let mut text: String = (0..x.cols()).map(|j| format!("f{j},")).collect();
    text.push_str("label\n");
    for (row, label) in x.row_iter().zip(labels) {
        for v in row {
            text.push_str(&format!("{v},"));
        }
        text.push_str(label);
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

/// Two unit-variance Gaussian classes in 2-D with means at ±1.5 on both
/// coordinates; labels "neg"/"pos" drawn with equal probability.
pub fn two_gaussians(rng: &mut Rng, n: usize) -> (Matrix, Vec<String>) {
    let cls: Vec<usize> = (0..n).map(|_| rng.below(2)).collect();
    let x = Matrix::from_fn(n, 2, |i, _| {
        let mu = if cls[i] == 1 { 1.5 } else { -1.5 };
        mu + rng.normal()
    })
    .unwrap();
    let labels = cls.iter().map(|&c| ["neg", "pos"][c].to_string()).collect();
    (x, labels)
}

/// Orthonormal columns (`dims × rank`) by Gram–Schmidt on Gaussian draws.
pub fn orthonormal_basis(rng: &mut Rng, dims: usize, rank: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < rank {
        let mut v: Vec<f64> = (0..dims).map(|_| rng.normal()).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= d * c);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    basis
}

/// `n` samples of `rank` unit-variance latent factors embedded along
/// orthonormal directions in `dims` dimensions, plus isotropic Gaussian
/// noise of standard deviation `noise`. Labels are the sign of the first
/// latent factor.
pub fn low_rank_dataset(
    rng: &mut Rng,
    n: usize,
    dims: usize,
    rank: usize,
    noise: f64,
) -> (Matrix, Vec<usize>) {
    let basis = orthonormal_basis(rng, dims, rank);
    let z: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..rank).map(|_| rng.normal()).collect())
        .collect();
    let x = Matrix::from_fn(n, dims, |i, j| {
        (0..rank).map(|r| z[i][r] * basis[r][j]).sum::<f64>() + noise * rng.normal()
    })
    .unwrap();
    let y = z.iter().map(|zi| usize::from(zi[0] > 0.0)).collect();
    (x, y)
}

/// Columns centered and divided by their population standard deviation.
pub fn standardize(x: &Matrix) -> Matrix {
    let var = reference_variances(x);
    let (n, p) = x.shape();
    let mean: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x.get(i, j)).sum::<f64>() / n as f64)
        .collect();
    Matrix::from_fn(n, p, |i, j| {
        let sd = var[j].sqrt();
        let c = x.get(i, j) - mean[j];
        if sd > 0.0 {
            c / sd
        } else {
            c
        }
    })
    .unwrap()
}

/// Expected outcome of patience-based early stopping on a monitored
/// sequence: `(epochs run, best epoch, stopped early)`.
pub fn expected_early_stop(seq: &[f64], minimize: bool, patience: usize) -> (usize, usize, bool) {
    let mut best = 0;
    let mut since = 0;
    for e in 1..seq.len() {
        let improved = if minimize {
            seq[e] < seq[best]
        } else {
            seq[e] > seq[best]
        };
        if improved {
            best = e;
            since = 0;
        } else {
            since += 1;
            if since == patience + 1 {
                return (e + 1, best, true);
            }
        }
    }
    (seq.len(), best, false)
}
