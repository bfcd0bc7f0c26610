//! Scalar losses with their gradients with respect to the prediction.
//!
//! Every function averages over the batch and returns `(value, d value / d pred)`.

/// Probabilities are clamped into `[EPS, 1 - EPS]` before taking logs.
pub const PROB_EPS: f64 = 1e-12;

pub fn mse(pred: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(pred.len(), target.len());
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, y)| {
            let e = y - p;
            value += e * e;
            -2.0 * e / n
        })
        .collect();
    (value / n, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BceOutput {
    pub value: f64,
    pub grad: Vec<f64>,
    /// How many probabilities had to be clamped away from 0 or 1.
    pub clamped: usize,
}

/// Binary cross-entropy `-(z ln p + (1 - z) ln(1 - p))` on probabilities.
pub fn bce(prob: &[f64], label: &[f64]) -> BceOutput {
    assert_eq!(prob.len(), label.len());
    let n = prob.len() as f64;
    let mut value = 0.0;
    let mut clamped = 0;
    let grad = prob
        .iter()
        .zip(label)
        .map(|(&p, &z)| {
            let pc = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            if pc != p {
                clamped += 1;
            }
            value -= z * pc.ln() + (1.0 - z) * (1.0 - pc).ln();
            (pc - z) / (pc * (1.0 - pc)) / n
        })
        .collect();
    BceOutput {
        value: value / n,
        grad,
        clamped,
    }
}

/// Pinball loss of the residual `e = y - pred` at level `q`.
#[inline]
pub fn pinball_value(e: f64, q: f64) -> f64 {
    (q * e).max((q - 1.0) * e)
}

/// `d pinball / d pred`. At the kink `e = 0` the subgradient in `e` is `q`.
#[inline]
pub fn pinball_grad(e: f64, q: f64) -> f64 {
    if e < 0.0 {
        1.0 - q
    } else {
        -q
    }
}

/// Pinball loss with one quantile level per sample.
pub fn pinball(pred: &[f64], target: &[f64], q: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(pred.len(), target.len());
    assert_eq!(pred.len(), q.len());
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .zip(q)
        .map(|((p, y), &q)| {
            let e = y - p;
            value += pinball_value(e, q);
            pinball_grad(e, q) / n
        })
        .collect();
    (value / n, grad)
}

/// Hinge penalty for quantile predictions on the wrong side of the outcome:
/// `relu(pred - y)` when `q < 0.5`, `relu(y - pred)` when `q > 0.5`, nothing
/// at `q = 0.5`.
#[inline]
pub fn crossing_value(pred: f64, y: f64, q: f64) -> f64 {
    if q < 0.5 {
        (pred - y).max(0.0)
    } else if q > 0.5 {
        (y - pred).max(0.0)
    } else {
        0.0
    }
}

#[inline]
pub fn crossing_grad(pred: f64, y: f64, q: f64) -> f64 {
    if q < 0.5 && pred > y {
        1.0
    } else if q > 0.5 && y > pred {
        -1.0
    } else {
        0.0
    }
}

pub fn crossing(pred: &[f64], target: &[f64], q: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(pred.len(), target.len());
    assert_eq!(pred.len(), q.len());
    let n = pred.len() as f64;
    let mut value = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .zip(q)
        .map(|((&p, &y), &q)| {
            value += crossing_value(p, y, q);
            crossing_grad(p, y, q) / n
        })
        .collect();
    (value / n, grad)
}
