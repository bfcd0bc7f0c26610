//! Generative quantile networks for Bayesian computation and distributional
//! causal inference.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a small deterministic feed-forward engine (dense layers, hand
//!   written reverse mode, SGD/Adam, finite-difference checks, checkpoints).
//! - [`dgp`]: seeded synthetic generators (the heterogeneous-effect causal
//!   benchmark and a conjugate normal model).
//! - [`engine`]: simulation tables and the learned inverse-CDF posterior map
//!   `theta = H(S(y), tau)`, plus the least-squares linear generative model.
//! - [`causal`]: the quantile causal network with a learned propensity block,
//!   its joint loss and counterfactual effect readouts.
//! - [`metrics`]: evaluation against ground truth and a linear baseline.
//!
//! Everything is `f64` and every stochastic step draws from an explicitly
//! seeded [`rng::Rng`], so identical seeds give bit-identical results.

pub mod causal;
pub mod dgp;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use rng::Rng;
