//! Simulation-based posterior engine: simulate triples, learn the inverse
//! map, sample posteriors by evaluating it.

pub mod inverse;
pub mod linear;
pub mod simtable;
pub mod summary;

pub use inverse::{engine_train_config, posterior_sample, train_inverse_map, train_inverse_map_with, ArchConfig, HeadLoss, InverseMap, TauEmbedding};
pub use linear::{estimate_linear_generative, estimate_linear_generative_with, LinearGenerative};
pub use simtable::{
    build_sim_table, BaseDist, IdentitySimulator, LinearGaussianSimulator, SimTable, Simulator,
};
pub use summary::SummaryNet;
