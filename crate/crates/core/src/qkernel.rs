//! Trainable quantum feature map and the dot-product kernel built on it.
//!
//! Circuit layout on `n` wires for an input of length `d` (indices taken
//! `i mod d`):
//!
//! 1. per wire: `RX(Θ₀ᵢ·xᵢ)` then `RZ(xᵢ²)`
//! 2. `depth` times: CNOT chain, `RY(Θ₁ᵢ·xᵢ)` on every wire, CNOT chain
//!
//! The features are the Pauli-Z expectations of every wire.

use crate::error::{QatError, Result};
use crate::statevector::{Angle, Circuit, CircuitGradients, Gate, Pauli};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    pub theta0: Vec<f64>,
    pub theta1: Vec<f64>,
    /// Repetitions of the entangling block. Θ₁ is shared across repetitions.
    pub depth: usize,
}

impl KernelParams {
    pub fn new(theta0: Vec<f64>, theta1: Vec<f64>) -> Result<Self> {
        if theta0.len() != theta1.len() || theta0.is_empty() {
            return Err(QatError::Shape(format!(
                "kernel angles need equal nonzero lengths, got {} and {}",
                theta0.len(),
                theta1.len()
            )));
        }
        Ok(Self {
            theta0,
            theta1,
            depth: 1,
        })
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.theta0.len()
    }

    /// `[Θ₀…, Θ₁…]`, the slot layout used by [`build_kernel_circuit`].
    pub fn flat(&self) -> Vec<f64> {
        self.theta0.iter().chain(&self.theta1).copied().collect()
    }

    pub fn n_scalars(&self) -> usize {
        2 * self.n_qubits()
    }
}

/// Wire-wise Pauli-Z features; every component lies in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

fn check_input(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(QatError::Empty("kernel input vector"));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(QatError::NonFinite(i));
    }
    Ok(())
}

/// Kernel circuit template for an input of length `d`. Angles reference
/// feature indices, so one template serves every input of that length.
pub fn kernel_circuit(n_qubits: usize, d: usize, depth: usize) -> Result<Circuit> {
    if d == 0 {
        return Err(QatError::Empty("kernel input vector"));
    }
    let mut c = Circuit::new(n_qubits, 2 * n_qubits)?;
    for i in 0..n_qubits {
        let index = i % d;
        c.push(Gate::Rx(
            i,
            Angle::ParamFeature {
                slot: i,
                index,
                scale: 1.0,
            },
        ))?;
        c.push(Gate::Rz(i, Angle::FeatureSquared { index }))?;
    }
    for _ in 0..depth {
        c.push_cnot_chain()?;
        for i in 0..n_qubits {
            c.push(Gate::Ry(
                i,
                Angle::ParamFeature {
                    slot: n_qubits + i,
                    index: i % d,
                    scale: 1.0,
                },
            ))?;
        }
        c.push_cnot_chain()?;
    }
    Ok(c)
}

/// Circuit for input `x`; run it with `kp.flat()` as parameters and `x` as
/// features.
pub fn build_kernel_circuit(x: &[f64], kp: &KernelParams) -> Result<Circuit> {
    check_input(x)?;
    kernel_circuit(kp.n_qubits(), x.len(), kp.depth)
}

pub fn feature_map(x: &[f64], kp: &KernelParams) -> Result<FeatureVector> {
    let circuit = build_kernel_circuit(x, kp)?;
    Ok(FeatureVector(circuit.expectations(&kp.flat(), x, Pauli::Z)?))
}

/// Jacobian of `φ(x)` with respect to `[Θ₀, Θ₁]` and to `x`.
pub fn feature_map_jacobian(x: &[f64], kp: &KernelParams) -> Result<CircuitGradients> {
    let circuit = build_kernel_circuit(x, kp)?;
    circuit.gradients(&kp.flat(), x, Pauli::Z)
}

/// `K(x, y) = φ(x)·φ(y)`
pub fn kernel(x: &[f64], y: &[f64], kp: &KernelParams) -> Result<f64> {
    Ok(feature_map(x, kp)?.dot(&feature_map(y, kp)?))
}

/// `∂K(x, y)/∂[Θ₀, Θ₁]`.
pub fn kernel_param_grad(x: &[f64], y: &[f64], kp: &KernelParams) -> Result<Vec<f64>> {
    let (fx, fy) = (feature_map(x, kp)?, feature_map(y, kp)?);
    let (jx, jy) = (feature_map_jacobian(x, kp)?, feature_map_jacobian(y, kp)?);
    let mut grad = vec![0.0; kp.n_scalars()];
    for w in 0..kp.n_qubits() {
        for (k, g) in grad.iter_mut().enumerate() {
            *g += jx.d_params[w][k] * fy.0[w] + fx.0[w] * jy.d_params[w][k];
        }
    }
    Ok(grad)
}

/// `G[i][j] = K(xs[i], xs[j])`. Each feature vector is computed once.
pub fn gram_matrix(xs: &[Vec<f64>], kp: &KernelParams) -> Result<Vec<Vec<f64>>> {
    if xs.is_empty() {
        return Err(QatError::Empty("gram matrix input list"));
    }
    let feats = xs.iter().map(|x| feature_map(x, kp)).collect::<Result<Vec<_>>>()?;
    Ok(feats
        .iter()
        .map(|fi| feats.iter().map(|fj| fi.dot(fj)).collect())
        .collect())
}
