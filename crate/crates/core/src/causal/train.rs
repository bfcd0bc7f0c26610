//! Minibatch training of the causal network.

use super::loss::{joint_loss_grad, CausalBatch, LossComponents, LossWeights};
use super::net::{CausalArch, CausalQuantileNet};
use crate::dgp::CausalDataset;
use crate::nn::optim::{self, OptState};
use crate::nn::TrainConfig;
use crate::rng::Rng;
use crate::{stats, Error, Result};

/// Settings used by the command line and the benchmark for the causal net.
pub fn causal_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 2000,
        batch_size: 128,
        learning_rate: 1e-3,
        seed,
        ..TrainConfig::default()
    }
}

/// Trains on the observational columns of `ds` (`x`, `z`, `y`).
pub fn train_causal(
    ds: &CausalDataset,
    arch: &CausalArch,
    train: &TrainConfig,
    weights: &LossWeights,
) -> Result<CausalQuantileNet> {
    train_causal_with(ds, arch, train, weights, |_, _| {})
}

/// Like [`train_causal`], calling `on_epoch` after every completed epoch so
/// callers can persist the trace even if a later epoch diverges.
pub fn train_causal_with(
    ds: &CausalDataset,
    arch: &CausalArch,
    train: &TrainConfig,
    weights: &LossWeights,
    mut on_epoch: impl FnMut(usize, &LossComponents),
) -> Result<CausalQuantileNet> {
    train.validate()?;
    weights.validate()?;
    ds.validate()?;
    let n = ds.n();
    if n < 2 {
        return Err(Error::invalid("training needs at least two units"));
    }

    let mut net = CausalQuantileNet::new(ds.p(), arch.clone(), train.seed)?;
    net.y_center = stats::mean(&ds.y);
    let sd = stats::variance(&ds.y).sqrt();
    net.y_scale = if sd > 0.0 { sd } else { 1.0 };
    let y_std: Vec<f64> = ds.y.iter().map(|v| (v - net.y_center) / net.y_scale).collect();
    let z = ds.z_f64();

    let mut shuffle_rng = Rng::derive(train.seed, 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut opt = OptState::default();
    let mut trace = Vec::with_capacity(train.epochs);
    let bs = train.batch_size.min(n);

    for epoch in 0..train.epochs {
        let epoch_cfg = train.for_epoch(epoch);
        let mut q_rng = Rng::derive(train.seed, 2 + epoch as u64);
        let q_all: Vec<f64> = (0..n).map(|_| q_rng.uniform()).collect();
        shuffle_rng.shuffle(&mut order);

        let mut acc = LossComponents::default();
        for idx in order.chunks(bs) {
            let xb = ds.x.select_rows(idx);
            let zb: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
            let yb: Vec<f64> = idx.iter().map(|&i| y_std[i]).collect();
            let qb: Vec<f64> = idx.iter().map(|&i| q_all[i]).collect();
            let batch = CausalBatch { x: &xb, z: &zb, y: &yb };
            let (c, grads) = joint_loss_grad(&net, &batch, &qb, weights)?;
            let share = idx.len() as f64 / n as f64;
            acc.l_z += share * c.l_z;
            acc.l_q += share * c.l_q;
            acc.l_mse += share * c.l_mse;
            acc.l_cross += share * c.l_cross;
            acc.clamped += c.clamped;

            let diverged = Error::Divergence {
                epoch,
                last_finite: epoch.checked_sub(1),
            };
            if !c.is_finite() || !grads.is_finite() {
                return Err(diverged);
            }
            let mut slots = net.slots(&grads);
            optim::step(&mut slots, &epoch_cfg, &mut opt).map_err(|e| match e {
                Error::NonFinite(_) => diverged,
                other => other,
            })?;
        }
        acc.total = weights.combine(acc.l_z, acc.l_q, acc.l_mse, acc.l_cross);
        if !acc.is_finite() {
            return Err(Error::Divergence {
                epoch,
                last_finite: epoch.checked_sub(1),
            });
        }
        on_epoch(epoch, &acc);
        trace.push(acc);
    }

    net.loss_trace = trace;
    net.trained = true;
    Ok(net)
}
