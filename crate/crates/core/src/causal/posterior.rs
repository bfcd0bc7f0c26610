//! Counterfactual readouts from a trained network.

use serde::{Deserialize, Serialize};

use super::net::{CausalQuantileNet, Gate};
use crate::dgp::CausalDataset;
use crate::linalg::Matrix;
use crate::rng::Rng;
use crate::{stats, Error, Result};

/// Posterior draws of one unit's treatment effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatePosterior {
    pub unit: usize,
    pub draws: Vec<f64>,
}

impl CatePosterior {
    pub fn mean(&self) -> f64 {
        stats::mean(&self.draws)
    }
}

/// Outputs on the original outcome scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub y_mean: Vec<f64>,
    pub y_quantile: Vec<f64>,
    pub z_prob: Vec<f64>,
}

fn ensure_trained(net: &CausalQuantileNet) -> Result<()> {
    if net.trained {
        Ok(())
    } else {
        Err(Error::Untrained)
    }
}

/// Row-wise forward pass mapped back to the outcome scale.
pub fn predict(net: &CausalQuantileNet, x: &Matrix, q: &[f64], gate: &Gate) -> Result<Prediction> {
    let t = net.forward(x, q, gate)?;
    let back = |v: Vec<f64>| v.into_iter().map(|s| net.y_center + net.y_scale * s).collect();
    Ok(Prediction {
        y_mean: back(t.y_mean()),
        y_quantile: back(t.y_quantile()),
        z_prob: t.z_prob(),
    })
}

/// Quantile-head effect `y2(x, g = on, q) - y2(x, g = off, q)` for each row
/// of `x`, on the outcome scale.
pub fn effect_readout(
    net: &CausalQuantileNet,
    x: &Matrix,
    q: &[f64],
    on: f64,
    off: f64,
) -> Result<Vec<f64>> {
    let treated = net.forward(x, q, &Gate::Forced(on))?;
    let control = net.forward(x, q, &Gate::Forced(off))?;
    Ok((0..x.rows())
        .map(|r| net.y_scale * (treated.out.get(r, 1) - control.out.get(r, 1)))
        .collect())
}

fn replicate(x: &[f64], times: usize) -> Matrix {
    let mut m = Matrix::zeros(times, x.len());
    for r in 0..times {
        m.row_mut(r).copy_from_slice(x);
    }
    m
}

/// `m` effect draws at levels `q_j ~ U(0, 1)` drawn from `Rng::new(seed)`.
pub fn cate_posterior(net: &CausalQuantileNet, x: &[f64], m: usize, seed: u64) -> Result<CatePosterior> {
    cate_posterior_for(net, 0, x, m, seed)
}

/// [`cate_posterior`] tagged with a unit id.
pub fn cate_posterior_for(
    net: &CausalQuantileNet,
    unit: usize,
    x: &[f64],
    m: usize,
    seed: u64,
) -> Result<CatePosterior> {
    ensure_trained(net)?;
    if m == 0 {
        return Err(Error::invalid("posterior needs at least one draw"));
    }
    let mut rng = Rng::new(seed);
    let q: Vec<f64> = (0..m).map(|_| rng.uniform()).collect();
    let draws = effect_readout(net, &replicate(x, m), &q, 1.0, 0.0)?;
    Ok(CatePosterior { unit, draws })
}

/// Posteriors for every unit of `ds`, unit `i` seeded with `Rng::sub_seed(seed, i)`.
pub fn cate_posteriors(net: &CausalQuantileNet, ds: &CausalDataset, m: usize, seed: u64) -> Result<Vec<CatePosterior>> {
    (0..ds.n())
        .map(|i| cate_posterior_for(net, i, ds.x.row(i), m, Rng::sub_seed(seed, i as u64)))
        .collect()
}

/// Midpoint grid `(g - 0.5) / G` for `g = 1..=G`.
pub fn midpoint_grid(size: usize) -> Vec<f64> {
    (1..=size).map(|g| (g as f64 - 0.5) / size as f64).collect()
}

/// Per-unit effect averaged over the quantile grid.
pub fn unit_effects_lorenz(net: &CausalQuantileNet, ds: &CausalDataset, grid: usize) -> Result<Vec<f64>> {
    ensure_trained(net)?;
    if grid == 0 {
        return Err(Error::invalid("grid size must be positive"));
    }
    let u = midpoint_grid(grid);
    (0..ds.n())
        .map(|i| {
            let d = effect_readout(net, &replicate(ds.x.row(i), grid), &u, 1.0, 0.0)?;
            Ok(stats::mean(&d))
        })
        .collect()
}

/// Average treatment effect: quantile-grid average per unit, then sample mean.
pub fn ate_lorenz(net: &CausalQuantileNet, ds: &CausalDataset, grid: usize) -> Result<f64> {
    Ok(stats::mean(&unit_effects_lorenz(net, ds, grid)?))
}

/// Equal-tailed nearest-rank interval at `level`.
pub fn credible_interval(posterior: &CatePosterior, level: f64) -> Result<(f64, f64)> {
    interval_of(&posterior.draws, level)
}

pub fn interval_of(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("credible level {level} outside (0, 1)")));
    }
    if draws.len() < 100 {
        return Err(Error::invalid(format!(
            "credible intervals need at least 100 draws, got {}",
            draws.len()
        )));
    }
    let s = stats::sorted(draws);
    let alpha = 1.0 - level;
    Ok((stats::nearest_rank(&s, alpha / 2.0), stats::nearest_rank(&s, 1.0 - alpha / 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::net::CausalArch;
    use crate::nn::{Activation, DenseLayer};

    fn trained_net(seed: u64) -> CausalQuantileNet {
        let mut net = CausalQuantileNet::new(3, CausalArch::default(), seed).unwrap();
        net.trained = true;
        net.y_scale = 2.0;
        net
    }

    #[test]
    fn untrained_net_is_rejected() {
        let net = CausalQuantileNet::new(3, CausalArch::default(), 0).unwrap();
        assert!(matches!(cate_posterior(&net, &[0.0; 3], 10, 1), Err(Error::Untrained)));
    }

    #[test]
    fn zero_effect_branch_gives_zero_draws() {
        let mut net = trained_net(1);
        net.tau_block = DenseLayer::zeros(3, 32, Activation::Relu);
        let p = cate_posterior(&net, &[0.3, -0.2, 1.0], 200, 4).unwrap();
        assert!(p.draws.iter().all(|&d| d == 0.0));
        let ds = crate::dgp::gen_causal(5, 1.0, 1).unwrap();
        assert_eq!(ate_lorenz(&net, &ds, 99).unwrap(), 0.0);
    }

    #[test]
    fn identical_arms_give_zero() {
        let net = trained_net(2);
        let x = Matrix::filled(7, 3, 0.4);
        let d = effect_readout(&net, &x, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7], 1.0, 1.0).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn draws_are_seeded() {
        let net = trained_net(3);
        let a = cate_posterior(&net, &[1.0, 2.0, 3.0], 50, 8).unwrap();
        let b = cate_posterior(&net, &[1.0, 2.0, 3.0], 50, 8).unwrap();
        let c = cate_posterior(&net, &[1.0, 2.0, 3.0], 50, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn midpoint_rule_is_exact_for_linear_readouts() {
        for g in [1, 2, 7, 99] {
            let u = midpoint_grid(g);
            let avg = stats::mean(&u.iter().map(|v| 3.0 - 2.0 * v).collect::<Vec<_>>());
            assert!((avg - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn interval_conventions() {
        let c = CatePosterior { unit: 0, draws: vec![1.5; 100] };
        assert_eq!(credible_interval(&c, 0.95).unwrap(), (1.5, 1.5));
        let p = CatePosterior { unit: 0, draws: (1..=100).rev().map(f64::from).collect() };
        // 5th and 95th order statistics by direct counting
        let lo = p.draws.iter().copied().filter(|&v| v <= 5.0).count();
        let hi = p.draws.iter().copied().filter(|&v| v <= 95.0).count();
        assert_eq!(credible_interval(&p, 0.9).unwrap(), (lo as f64, hi as f64));
        let mut last = (f64::INFINITY, f64::NEG_INFINITY);
        for level in [0.1, 0.5, 0.8, 0.9, 0.95, 0.99] {
            let (a, b) = credible_interval(&p, level).unwrap();
            assert!(a <= last.0 && b >= last.1);
            last = (a, b);
        }
        assert!(credible_interval(&CatePosterior { unit: 0, draws: vec![0.0; 99] }, 0.9).is_err());
        assert!(credible_interval(&p, 1.0).is_err());
    }
}
