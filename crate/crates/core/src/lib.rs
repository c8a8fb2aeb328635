//! Quantum-enhanced transformer encoder for text classification.
//!
//! * [`statevector`]: dense simulator for small parameterized circuits
//! * [`qkernel`]: trainable Pauli-Z feature map and its dot-product kernel
//! * [`attention`]: interference attention, quantum multi-head attention and
//!   the superposition layer
//! * [`nn`]: reverse-mode autodiff, classical layers, AdamW, checkpoints
//! * [`model`]: quantum and classical encoders with shared scaffolding
//! * [`harness`]: data ingestion, training, metrics, exports

pub mod attention;
pub mod error;
pub mod harness;
pub mod model;
pub mod nn;
pub mod qkernel;
pub mod statevector;

pub use error::{QatError, Result};
