//! Minimal feed-forward network engine.

pub mod checkpoint;
pub mod embed;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod mlp;
pub mod optim;

pub use checkpoint::Checkpoint;
pub use embed::cosine_embed;
pub use gradcheck::grad_check;
pub use layer::{sigmoid, Activation, DenseLayer, LayerGrad};
pub use mlp::{ForwardTrace, Gradients, Mlp};
pub use optim::{optimizer_step, OptState, OptimizerKind, Schedule, TrainConfig};
