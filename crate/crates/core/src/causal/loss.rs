//! Joint training objective of the causal network.

use serde::{Deserialize, Serialize};

use super::net::{CausalGrads, CausalQuantileNet, CausalTrace, Gate};
use crate::linalg::Matrix;
use crate::nn::loss::{bce, crossing, mse, pinball};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w_z: f64,
    pub w_q: f64,
    pub w_mse: f64,
    pub w_cross: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            w_z: 1.0,
            w_q: 1.0,
            w_mse: 1.0,
            w_cross: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.w_z, self.w_q, self.w_mse, self.w_cross];
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("loss weights must be finite and nonnegative"));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::invalid("at least one loss weight must be positive"));
        }
        Ok(())
    }

    /// `w_z l_z + w_q l_q + w_mse l_mse + w_cross l_cross`, always evaluated in
    /// this order so totals re-sum exactly from the components.
    pub fn combine(&self, l_z: f64, l_q: f64, l_mse: f64, l_cross: f64) -> f64 {
        self.w_z * l_z + self.w_q * l_q + self.w_mse * l_mse + self.w_cross * l_cross
    }
}

/// Loss components for one batch or one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossComponents {
    /// Binary cross-entropy of the propensity head.
    pub l_z: f64,
    /// Pinball loss of the quantile head.
    pub l_q: f64,
    /// Squared error of the mean head.
    pub l_mse: f64,
    /// Quantile crossing hinge.
    pub l_cross: f64,
    pub total: f64,
    /// Propensities clamped away from 0 or 1 while evaluating `l_z`.
    pub clamped: usize,
}

impl LossComponents {
    pub fn is_finite(&self) -> bool {
        [self.l_z, self.l_q, self.l_mse, self.l_cross, self.total]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// A batch of standardized training rows.
#[derive(Debug, Clone, Copy)]
pub struct CausalBatch<'a> {
    pub x: &'a Matrix,
    pub z: &'a [f64],
    pub y: &'a [f64],
}

impl CausalBatch<'_> {
    fn validate(&self) -> Result<()> {
        let n = self.x.rows();
        if self.z.len() != n {
            return Err(Error::dim("treatment labels", n, self.z.len()));
        }
        if self.y.len() != n {
            return Err(Error::dim("outcomes", n, self.y.len()));
        }
        if n == 0 {
            return Err(Error::invalid("empty batch"));
        }
        Ok(())
    }
}

/// Components from an existing forward pass, plus the gradients with respect
/// to the two outputs and the propensity.
pub(crate) fn components_from_trace(
    trace: &CausalTrace,
    batch: &CausalBatch<'_>,
    weights: &LossWeights,
) -> (LossComponents, Matrix, Vec<f64>) {
    let y_mean = trace.y_mean();
    let y_q = trace.y_quantile();
    let zp = trace.z_prob();

    let z = bce(&zp, batch.z);
    let (l_q, g_q) = pinball(&y_q, batch.y, &trace.q);
    let (l_mse, g_mse) = mse(&y_mean, batch.y);
    let (l_cross, g_cross) = crossing(&y_q, batch.y, &trace.q);

    let comps = LossComponents {
        l_z: z.value,
        l_q,
        l_mse,
        l_cross,
        total: weights.combine(z.value, l_q, l_mse, l_cross),
        clamped: z.clamped,
    };

    let b = y_mean.len();
    let mut d_out = Matrix::zeros(b, 2);
    for i in 0..b {
        d_out.set(i, 0, weights.w_mse * g_mse[i]);
        d_out.set(i, 1, weights.w_q * g_q[i] + weights.w_cross * g_cross[i]);
    }
    let d_z: Vec<f64> = z.grad.iter().map(|g| weights.w_z * g).collect();
    (comps, d_out, d_z)
}

fn training_gate(net: &CausalQuantileNet, batch: &CausalBatch<'_>) -> Gate {
    match net.arch.training_gate {
        super::net::TrainingGate::Treatment => Gate::PerUnit(batch.z.to_vec()),
        super::net::TrainingGate::Propensity => Gate::Propensity,
    }
}

/// Evaluates the joint loss on a batch with one quantile level per row.
pub fn joint_loss(
    net: &CausalQuantileNet,
    batch: &CausalBatch<'_>,
    q: &[f64],
    weights: &LossWeights,
) -> Result<LossComponents> {
    batch.validate()?;
    let trace = net.forward(batch.x, q, &training_gate(net, batch))?;
    Ok(components_from_trace(&trace, batch, weights).0)
}

/// Joint loss and its gradient with respect to every network parameter.
pub fn joint_loss_grad(
    net: &CausalQuantileNet,
    batch: &CausalBatch<'_>,
    q: &[f64],
    weights: &LossWeights,
) -> Result<(LossComponents, CausalGrads)> {
    batch.validate()?;
    let trace = net.forward(batch.x, q, &training_gate(net, batch))?;
    let (comps, d_out, d_z) = components_from_trace(&trace, batch, weights);
    let grads = net.backward(&trace, &d_out, &d_z)?;
    Ok((comps, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::net::{CausalArch, Modulation, TrainingGate};
    use crate::nn::gradcheck::{max_relative_error, numeric_gradient};
    use crate::rng::Rng;

    fn random_batch(n: usize, seed: u64) -> (Matrix, Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rng = Rng::new(seed);
        let x: Vec<f64> = (0..n * 3).map(|_| rng.gaussian()).collect();
        let z: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.bernoulli(0.4)))).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        (Matrix::from_vec(n, 3, x).unwrap(), z, y, q)
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::default().validate().is_ok());
        let zero = LossWeights { w_z: 0.0, w_q: 0.0, w_mse: 0.0, w_cross: 0.0 };
        assert!(zero.validate().is_err());
        assert!(LossWeights { w_q: -1.0, ..LossWeights::default() }.validate().is_err());
    }

    #[test]
    fn matches_straight_line_reimplementation() {
        let net = CausalQuantileNet::new(3, CausalArch::default(), 4).unwrap();
        let (x, z, y, q) = random_batch(17, 9);
        let w = LossWeights { w_z: 0.7, w_q: 1.3, w_mse: 0.4, w_cross: 2.0 };
        let got = joint_loss(&net, &CausalBatch { x: &x, z: &z, y: &y }, &q, &w).unwrap();

        let (mut lz, mut lq, mut lm, mut lc) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..17 {
            let (m, qh, p, _, _) =
                crate::causal::net::forward_causal(&net, x.row(i), q[i], z[i]).unwrap();
            lz -= z[i] * p.ln() + (1.0 - z[i]) * (1.0 - p).ln();
            let e2 = y[i] - qh;
            lq += (q[i] * e2).max((q[i] - 1.0) * e2);
            lm += (y[i] - m).powi(2);
            if q[i] < 0.5 {
                lc += (qh - y[i]).max(0.0);
            } else if q[i] > 0.5 {
                lc += (y[i] - qh).max(0.0);
            }
        }
        let n = 17.0;
        let (lz, lq, lm, lc) = (lz / n, lq / n, lm / n, lc / n);
        for (a, b) in [(got.l_z, lz), (got.l_q, lq), (got.l_mse, lm), (got.l_cross, lc)] {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let total = 0.7 * lz + 1.3 * lq + 0.4 * lm + 2.0 * lc;
        assert!((got.total - total).abs() < 1e-12);
        assert_eq!(got.total, w.combine(got.l_z, got.l_q, got.l_mse, got.l_cross));
    }

    #[test]
    fn median_pinball_is_symmetric() {
        assert_eq!(crate::nn::loss::pinball_value(2.0, 0.5), 1.0);
        assert_eq!(crate::nn::loss::pinball_value(-2.0, 0.5), 1.0);
    }

    fn check_gradients(arch: CausalArch, seed: u64) {
        let mut net = CausalQuantileNet::new(3, arch, seed).unwrap();
        let (x, z, y, q) = random_batch(6, seed + 100);
        let w = LossWeights { w_z: 0.9, w_q: 1.1, w_mse: 0.8, w_cross: 1.7 };
        let batch = CausalBatch { x: &x, z: &z, y: &y };
        let (_, grads) = joint_loss_grad(&net, &batch, &q, &w).unwrap();
        let analytic = grads.flatten();
        let theta = net.flat_params();
        let numeric = numeric_gradient(
            |p| {
                net.set_flat_params(p).unwrap();
                joint_loss(&net, &batch, &q, &w).unwrap().total
            },
            &theta,
            1e-6,
        );
        let err = max_relative_error(&analytic, &numeric).unwrap();
        assert!(err < 1e-5, "max relative error {err}");
    }

    #[test]
    fn gradients_match_finite_differences() {
        // tanh keeps the objective smooth away from hinge kinks
        let base = CausalArch {
            embed_dim: 4,
            width: 5,
            prop_width: 3,
            activation: crate::nn::Activation::Tanh,
            ..CausalArch::default()
        };
        check_gradients(base.clone(), 1);
        check_gradients(CausalArch { training_gate: TrainingGate::Propensity, ..base.clone() }, 2);
        check_gradients(CausalArch { modulation: Modulation::Scalar, ..base }, 3);
    }
}
