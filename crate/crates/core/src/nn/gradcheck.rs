//! Central finite-difference verification of hand-written gradients.

use super::mlp::Mlp;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// Error measure used throughout: `|a - n| / max(1, |a| + |n|)`.
#[inline]
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1.0)
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn numeric_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + step;
            let up = f(&probe);
            probe[i] = orig - step;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Largest [`relative_error`] between two gradient vectors. NaN anywhere is
/// an error.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> Result<f64> {
    if analytic.len() != numeric.len() {
        return Err(Error::dim("gradient length", analytic.len(), numeric.len()));
    }
    let mut worst = 0.0f64;
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        if a.is_nan() || n.is_nan() {
            return Err(Error::NonFinite(format!("gradient coordinate {i}")));
        }
        worst = worst.max(relative_error(*a, *n));
    }
    Ok(worst)
}

/// Compares back-propagated parameter gradients of `net` under `loss`
/// against central differences with the given `step`.
///
/// `loss` maps the network output for `input` to `(value, d value / d output)`.
/// Returns the maximum relative error over every weight and bias.
pub fn grad_check<F>(net: &Mlp, loss: F, input: &Matrix, step: f64) -> Result<f64>
where
    F: Fn(&Matrix) -> (f64, Matrix),
{
    if !(step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let trace = net.forward_batch(input)?;
    let (_, d_out) = loss(trace.output());
    let grads = net.backward(&trace, &d_out)?;

    let mut analytic = Vec::with_capacity(net.param_count());
    for g in &grads.layers {
        analytic.extend_from_slice(g.weights.as_slice());
        analytic.extend_from_slice(&g.bias);
    }

    let mut probe = net.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    let eval = |p: &Mlp| -> Result<f64> { Ok(loss(&p.predict(input)?).0) };
    for k in 0..net.layers().len() {
        let n_w = net.layers()[k].weights.as_slice().len();
        for i in 0..n_w + net.layers()[k].bias.len() {
            let orig = get_param(&probe, k, i, n_w);
            set_param(&mut probe, k, i, n_w, orig + step);
            let up = eval(&probe)?;
            set_param(&mut probe, k, i, n_w, orig - step);
            let down = eval(&probe)?;
            set_param(&mut probe, k, i, n_w, orig);
            numeric.push((up - down) / (2.0 * step));
        }
    }
    max_relative_error(&analytic, &numeric)
}

fn get_param(net: &Mlp, k: usize, i: usize, n_w: usize) -> f64 {
    let l = &net.layers()[k];
    if i < n_w {
        l.weights.as_slice()[i]
    } else {
        l.bias[i - n_w]
    }
}

fn set_param(net: &mut Mlp, k: usize, i: usize, n_w: usize, v: f64) {
    let l = &mut net.layers_mut()[k];
    if i < n_w {
        l.weights.as_mut_slice()[i] = v;
    } else {
        l.bias[i - n_w] = v;
    }
}
