//! Minimal differentiable tensor core and the classical layers built on it.

pub mod checkpoint;
pub mod graph;
pub mod layers;
pub mod optim;
pub mod params;
pub mod rng;

pub use graph::{Gradients, Graph, Mat, Tensor};
pub use layers::{classical_attention, classical_multihead, dropout, ffn, linear, AttentionWeights};
pub use optim::{adamw_step, AdamWConfig, OptimState};
pub use params::{BoundParams, Init, ParamSet};

/// Layer-norm epsilon used throughout the model.
pub const LAYER_NORM_EPS: f64 = 1e-5;
