//! Distributional treatment-effect estimation with a quantile network.

pub mod loss;
pub mod net;
pub mod posterior;
pub mod train;

pub use crate::nn::cosine_embed;
pub use loss::{joint_loss, joint_loss_grad, CausalBatch, LossComponents, LossWeights};
pub use net::{forward_causal, CausalArch, CausalGrads, CausalQuantileNet, CausalTrace, Gate, Modulation, TrainingGate};
pub use posterior::{
    ate_lorenz, cate_posterior, cate_posterior_for, cate_posteriors, credible_interval, effect_readout, interval_of,
    midpoint_grid, predict, unit_effects_lorenz, CatePosterior, Prediction,
};
pub use train::{causal_train_config, train_causal, train_causal_with};
