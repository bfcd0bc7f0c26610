//! First-order optimizers over named parameter slices.

use serde::{Deserialize, Serialize};

use super::layer::{DenseLayer, LayerGrad};
use super::mlp::Mlp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Learning-rate schedule over epochs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Constant,
    /// Half-cosine from the base rate down to `floor` times the base rate.
    Cosine { floor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Global L2-norm clip applied to the full gradient. Off by default.
    pub grad_clip: Option<f64>,
    #[serde(default)]
    pub schedule: Schedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 100,
            optimizer: OptimizerKind::adam(),
            seed: 0,
            grad_clip: None,
            schedule: Schedule::Constant,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::invalid("gradient clip must be positive"));
            }
        }
        if let Schedule::Cosine { floor } = self.schedule {
            if !(0.0..=1.0).contains(&floor) {
                return Err(Error::invalid("schedule floor must lie in [0, 1]"));
            }
        }
        if let OptimizerKind::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::invalid("adam needs beta in [0, 1) and eps > 0"));
            }
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            Schedule::Constant => self.learning_rate,
            Schedule::Cosine { floor } => {
                let t = epoch as f64 / self.epochs.max(1) as f64;
                let w = 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
                self.learning_rate * (floor + (1.0 - floor) * w)
            }
        }
    }

    /// Copy with the learning rate of `epoch` baked in.
    pub fn for_epoch(&self, epoch: usize) -> TrainConfig {
        TrainConfig {
            learning_rate: self.lr_at(epoch),
            ..self.clone()
        }
    }
}

/// Moment buffers for Adam, one per parameter slot, plus the step count.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptState {
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

/// A parameter buffer and its gradient.
pub struct ParamSlot<'a> {
    pub name: String,
    pub param: &'a mut [f64],
    pub grad: &'a [f64],
}

/// Slots for one dense layer, weights first.
pub fn layer_slots<'a>(
    layer: &'a mut DenseLayer,
    grad: &'a LayerGrad,
    name: &str,
) -> [ParamSlot<'a>; 2] {
    [
        ParamSlot {
            name: format!("{name} weights"),
            param: layer.weights.as_mut_slice(),
            grad: grad.weights.as_slice(),
        },
        ParamSlot {
            name: format!("{name} bias"),
            param: &mut layer.bias,
            grad: &grad.bias,
        },
    ]
}

pub fn mlp_slots<'a>(net: &'a mut Mlp, grads: &'a [LayerGrad], prefix: &str) -> Vec<ParamSlot<'a>> {
    net.layers_mut()
        .iter_mut()
        .zip(grads)
        .enumerate()
        .flat_map(|(k, (l, g))| layer_slots(l, g, &format!("{prefix}layer {k}")))
        .collect()
}

/// Applies one update to every slot. Slots must come in the same order and
/// with the same lengths on every call sharing `state`.
pub fn step(slots: &mut [ParamSlot<'_>], config: &TrainConfig, state: &mut OptState) -> Result<()> {
    for s in slots.iter() {
        if s.param.len() != s.grad.len() {
            return Err(Error::dim(s.name.clone(), s.param.len(), s.grad.len()));
        }
        if !s.grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of {}", s.name)));
        }
    }
    let scale = match config.grad_clip {
        Some(clip) => {
            let norm = slots
                .iter()
                .flat_map(|s| s.grad.iter())
                .map(|g| g * g)
                .sum::<f64>()
                .sqrt();
            if norm > clip {
                clip / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    let lr = config.learning_rate;
    match config.optimizer {
        OptimizerKind::Sgd => {
            for s in slots.iter_mut() {
                for (p, g) in s.param.iter_mut().zip(s.grad) {
                    *p -= lr * scale * g;
                }
            }
            state.step += 1;
        }
        OptimizerKind::Adam { beta1, beta2, eps } => {
            if state.first.is_empty() {
                state.first = slots.iter().map(|s| vec![0.0; s.param.len()]).collect();
                state.second = state.first.clone();
            }
            if state.first.len() != slots.len() {
                return Err(Error::dim("optimizer state slots", state.first.len(), slots.len()));
            }
            state.step += 1;
            let t = state.step as i32;
            let c1 = 1.0 - beta1.powi(t);
            let c2 = 1.0 - beta2.powi(t);
            for ((s, m), v) in slots
                .iter_mut()
                .zip(state.first.iter_mut())
                .zip(state.second.iter_mut())
            {
                if m.len() != s.param.len() {
                    return Err(Error::dim(s.name.clone(), m.len(), s.param.len()));
                }
                for (((p, &g), m), v) in s.param.iter_mut().zip(s.grad).zip(m.iter_mut()).zip(v.iter_mut()) {
                    let g = g * scale;
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            }
        }
    }
    for s in slots.iter() {
        if !s.param.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite(format!("parameters of {}", s.name)));
        }
    }
    Ok(())
}

/// One optimizer step on a plain [`Mlp`].
pub fn optimizer_step(
    net: &mut Mlp,
    grads: &[LayerGrad],
    config: &TrainConfig,
    state: &mut OptState,
) -> Result<()> {
    if grads.len() != net.layers().len() {
        return Err(Error::dim("gradient layers", net.layers().len(), grads.len()));
    }
    let mut slots = mlp_slots(net, grads, "");
    step(&mut slots, config, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::nn::layer::Activation;

    fn scalar_net(p: f64) -> Mlp {
        Mlp::new(vec![DenseLayer::new(
            Matrix::from_vec(1, 1, vec![p]).unwrap(),
            vec![0.0],
            Activation::Identity,
        )
        .unwrap()])
        .unwrap()
    }

    fn grad(g: f64) -> Vec<LayerGrad> {
        vec![LayerGrad {
            weights: Matrix::from_vec(1, 1, vec![g]).unwrap(),
            bias: vec![0.0],
        }]
    }

    #[test]
    fn sgd_is_definitional() {
        let mut net = scalar_net(1.0);
        let cfg = TrainConfig {
            learning_rate: 0.1,
            optimizer: OptimizerKind::Sgd,
            ..TrainConfig::default()
        };
        optimizer_step(&mut net, &grad(1.0), &cfg, &mut OptState::default()).unwrap();
        assert!((net.layers()[0].weights.get(0, 0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_leaves_parameters_and_decays_moments() {
        let mut net = scalar_net(1.0);
        let cfg = TrainConfig::default();
        let mut st = OptState::default();
        optimizer_step(&mut net, &grad(1.0), &cfg, &mut st).unwrap();
        let p = net.layers()[0].weights.get(0, 0);
        let (m0, v0) = (st.first[0][0], st.second[0][0]);
        // Reset the first moment to isolate the zero-gradient behaviour.
        st.first[0][0] = 0.0;
        optimizer_step(&mut net, &grad(0.0), &cfg, &mut st).unwrap();
        assert_eq!(net.layers()[0].weights.get(0, 0), p);
        assert!(st.second[0][0] < v0 && st.second[0][0] > 0.0);
        assert!(m0 > 0.0);
    }

    #[test]
    fn adam_on_a_parabola_shrinks_monotonically() {
        // f(p) = p^2, gradient 2p, ten steps from p = 1.
        let mut net = scalar_net(1.0);
        let cfg = TrainConfig {
            learning_rate: 0.1,
            ..TrainConfig::default()
        };
        let mut st = OptState::default();
        let mut prev = 1.0f64;
        for _ in 0..10 {
            let p = net.layers()[0].weights.get(0, 0);
            optimizer_step(&mut net, &grad(2.0 * p), &cfg, &mut st).unwrap();
            let now = net.layers()[0].weights.get(0, 0);
            assert!(now.abs() < prev.abs());
            prev = now;
        }
    }

    #[test]
    fn non_finite_gradient_names_the_layer() {
        let mut net = scalar_net(1.0);
        let err = optimizer_step(&mut net, &grad(f64::NAN), &TrainConfig::default(), &mut OptState::default())
            .unwrap_err();
        assert!(err.to_string().contains("layer 0 weights"), "{err}");
    }

    #[test]
    fn clipping_bounds_the_sgd_step() {
        let mut net = scalar_net(0.0);
        let cfg = TrainConfig {
            learning_rate: 1.0,
            optimizer: OptimizerKind::Sgd,
            grad_clip: Some(0.5),
            ..TrainConfig::default()
        };
        optimizer_step(&mut net, &grad(10.0), &cfg, &mut OptState::default()).unwrap();
        assert!((net.layers()[0].weights.get(0, 0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        assert!(TrainConfig { learning_rate: 0.0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { epochs: 0, ..ok.clone() }.validate().is_err());
        assert!(TrainConfig { schedule: Schedule::Cosine { floor: 2.0 }, ..ok }.validate().is_err());
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let c = TrainConfig {
            learning_rate: 1.0,
            epochs: 10,
            schedule: Schedule::Cosine { floor: 0.1 },
            ..TrainConfig::default()
        };
        assert_eq!(c.lr_at(0), 1.0);
        assert!((c.lr_at(5) - 0.55).abs() < 1e-15);
        let lrs: Vec<f64> = (0..10).map(|e| c.lr_at(e)).collect();
        assert!(lrs.windows(2).all(|w| w[1] < w[0]));
        assert!(lrs[9] > 0.1);
        assert_eq!(TrainConfig::default().lr_at(50), 1e-3);
        assert_eq!(c.for_epoch(5).learning_rate, c.lr_at(5));
    }
}
