//! Small descriptive-statistics helpers shared by the generators and metrics.

use crate::{Error, Result};

/// Running mean; exact for constant input. `NaN` when empty.
pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut m = 0.0;
    for (k, x) in v.iter().enumerate() {
        m += (x - m) / (k + 1) as f64;
    }
    m
}

/// Variance with divisor `n`.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Variance with divisor `n - 1`.
pub fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn rmse(est: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(est.len(), truth.len());
    let s: f64 = est.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    (s / est.len() as f64).sqrt()
}

/// Nearest-rank quantile of an already sorted sample: the
/// `max(1, ceil(p * n))`-th smallest value.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    // snap products like 0.95 * 100 = 95.00000000000001 back to the integer
    let x = p * n as f64;
    let k = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() } as usize;
    sorted[k.clamp(1, n) - 1]
}

pub fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Kolmogorov-Smirnov distance between the empirical law of `u` and U(0,1).
pub fn ks_uniform(u: &[f64]) -> f64 {
    let s = sorted(u);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let hi = (i + 1) as f64 / n - x;
            let lo = x - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

/// Area under the ROC curve of `score` for binary `label`, with ties
/// counted as one half (Mann-Whitney form).
pub fn auc(score: &[f64], label: &[bool]) -> Result<f64> {
    if score.len() != label.len() {
        return Err(Error::dim("auc", score.len(), label.len()));
    }
    let pos = label.iter().filter(|&&l| l).count();
    let neg = label.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("auc needs both classes"));
    }
    let mut idx: Vec<usize> = (0..score.len()).collect();
    idx.sort_by(|&a, &b| score[a].total_cmp(&score[b]));
    // Midranks over tied blocks.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && score[idx[j + 1]] == score[idx[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if label[k] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q))
}
