//! AdamW with decoupled weight decay.
//!
//! ```text
//! p ← p · (1 − lr·λ)
//! m ← β₁ m + (1 − β₁) g
//! v ← β₂ v + (1 − β₂) g²
//! p ← p − lr · m̂ / (√v̂ + ε),   m̂ = m/(1−β₁ᵗ), v̂ = v/(1−β₂ᵗ)
//! ```

use std::collections::BTreeMap;

use super::graph::Mat;
use super::params::ParamSet;
use crate::error::{QatError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 3e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimState {
    pub config: AdamWConfig,
    pub step: u64,
    m: BTreeMap<String, Mat>,
    v: BTreeMap<String, Mat>,
}

impl OptimState {
    pub fn new(params: &ParamSet, config: AdamWConfig) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|(k, a)| (k.to_string(), Mat::zeros(a.dim())))
                .collect()
        };
        Self {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn first_moment(&self, name: &str) -> Option<&Mat> {
        self.m.get(name)
    }
}

/// One optimizer step over every array of `params`.
pub fn adamw_step(params: &mut ParamSet, grads: &BTreeMap<String, Mat>, state: &mut OptimState) -> Result<()> {
    for (name, p) in params.iter() {
        let g = grads
            .get(name)
            .ok_or_else(|| QatError::MissingArray(name.to_string()))?;
        let m = state
            .m
            .get(name)
            .ok_or_else(|| QatError::MissingArray(name.to_string()))?;
        if g.dim() != p.dim() || m.dim() != p.dim() {
            return Err(QatError::Shape(format!(
                "adamw `{name}`: param {:?}, grad {:?}, moment {:?}",
                p.dim(),
                g.dim(),
                m.dim()
            )));
        }
    }
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    for (name, p) in params.iter_mut() {
        let g = &grads[name];
        let m = state.m.get_mut(name).expect("checked above");
        let v = state.v.get_mut(name).expect("checked above");
        ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
            *p *= 1.0 - c.lr * c.weight_decay;
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
        });
    }
    Ok(())
}
