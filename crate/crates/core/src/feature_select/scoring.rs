//! Univariate feature scores against integer class labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::par;

/// F-statistic reported when within-class variation vanishes but the class
/// means differ.
pub const F_SENTINEL: f64 = 1e12;

pub const DEFAULT_MI_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFn {
    FClassif,
    MutualInfo,
}

impl ScoreFn {
    pub fn score(self, x: &Matrix, y: &[usize]) -> Result<Vec<f64>> {
        match self {
            ScoreFn::FClassif => score_f_classif(x, y),
            ScoreFn::MutualInfo => score_mutual_info(x, y, DEFAULT_MI_BINS),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreFn::FClassif => "f_classif",
            ScoreFn::MutualInfo => "mutual_info",
        }
    }
}

/// Distinct labels in ascending order, remapped to `0..k`.
struct Classes {
    index: Vec<usize>,
    counts: Vec<usize>,
}

fn classes(x: &Matrix, y: &[usize], scorer: &str) -> Result<Classes> {
    if y.len() != x.rows() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            y.len(),
            x.rows()
        )));
    }
    let mut distinct: Vec<usize> = y.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::invalid(format!("{scorer} requires ≥2 classes")));
    }
    let index: Vec<usize> = y
        .iter()
        .map(|l| distinct.binary_search(l).expect("label present"))
        .collect();
    let mut counts = vec![0; distinct.len()];
    for &c in &index {
        counts[c] += 1;
    }
    Ok(Classes { index, counts })
}

/// One-way ANOVA F-statistic of every feature.
///
/// Zero between-class variation scores 0; zero within-class variation with
/// nonzero between-class variation scores [`F_SENTINEL`].
pub fn score_f_classif(x: &Matrix, y: &[usize]) -> Result<Vec<f64>> {
    let cl = classes(x, y, "f_classif")?;
    let (n, p) = x.shape();
    let k = cl.counts.len();
    Ok(par::map_range(p, n * p, |j| {
        let mut sums = vec![0.0; k];
        for i in 0..n {
            sums[cl.index[i]] += x.get(i, j);
        }
        let grand = sums.iter().sum::<f64>() / n as f64;
        let means: Vec<f64> = sums
            .iter()
            .zip(&cl.counts)
            .map(|(s, &c)| s / c as f64)
            .collect();
        let ss_between: f64 = means
            .iter()
            .zip(&cl.counts)
            .map(|(m, &c)| c as f64 * (m - grand).powi(2))
            .sum();
        let ss_within: f64 = (0..n)
            .map(|i| (x.get(i, j) - means[cl.index[i]]).powi(2))
            .sum();
        let scale = ss_between + ss_within;
        if ss_between <= 1e-14 * scale || scale == 0.0 {
            return 0.0;
        }
        if ss_within <= 1e-14 * scale || n == k {
            return F_SENTINEL;
        }
        let ms_between = ss_between / (k - 1) as f64;
        let ms_within = ss_within / (n - k) as f64;
        ms_between / ms_within
    }))
}

/// Plug-in mutual information (nats) between each equal-width-binned
/// feature and the labels. Constant features score 0.
pub fn score_mutual_info(x: &Matrix, y: &[usize], bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::invalid("mutual information needs at least one bin"));
    }
    let cl = classes(x, y, "mutual_info")?;
    let (n, p) = x.shape();
    let k = cl.counts.len();
    let nf = n as f64;
    Ok(par::map_range(p, n * p, |j| {
        let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = x.get(i, j);
            (lo.min(v), hi.max(v))
        });
        if hi <= lo {
            return 0.0;
        }
        let width = hi - lo;
        let mut joint = vec![0usize; bins * k];
        let mut marginal = vec![0usize; bins];
        for i in 0..n {
            let b = (((x.get(i, j) - lo) / width * bins as f64) as usize).min(bins - 1);
            joint[b * k + cl.index[i]] += 1;
            marginal[b] += 1;
        }
        let mut mi = 0.0;
        for b in 0..bins {
            for c in 0..k {
                let count = joint[b * k + c];
                if count == 0 {
                    continue;
                }
                let pxy = count as f64 / nf;
                let px = marginal[b] as f64 / nf;
                let py = cl.counts[c] as f64 / nf;
                mi += pxy * (pxy / (px * py)).ln();
            }
        }
        mi.max(0.0)
    }))
}
