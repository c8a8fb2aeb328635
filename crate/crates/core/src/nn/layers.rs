//! Classical building blocks on top of [`Graph`] ops.

use rand::Rng;

use super::graph::{Graph, Mat, Tensor};
use crate::error::{QatError, Result};

/// `x W + b`; `b` is optional and `1×out`.
pub fn linear(g: &mut Graph, x: Tensor, w: Tensor, b: Option<Tensor>) -> Result<Tensor> {
    let y = g.matmul(x, w)?;
    match b {
        Some(b) => g.add_row(y, b),
        None => Ok(y),
    }
}

/// Inverted dropout: kept entries are scaled by `1/(1-rate)`. Identity when
/// not training or when `rate == 0`.
pub fn dropout(g: &mut Graph, x: Tensor, rate: f64, training: bool, rng: &mut impl Rng) -> Result<Tensor> {
    if !training || rate == 0.0 {
        return Ok(x);
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(QatError::Config(format!("dropout rate {rate} not in [0, 1)")));
    }
    let keep = 1.0 - rate;
    let mask = Mat::from_shape_simple_fn(g.dim(x), || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 });
    let mask = g.constant(mask);
    g.mul(x, mask)
}

fn scaled_dot_attention(g: &mut Graph, q: Tensor, k: Tensor, v: Tensor) -> Result<(Tensor, Tensor)> {
    let dk = g.dim(q).1 as f64;
    let kt = g.transpose(k);
    let scores = g.matmul(q, kt)?;
    let scores = g.scale(scores, 1.0 / dk.sqrt());
    let attn = g.softmax_rows(scores);
    let out = g.matmul(attn, v)?;
    Ok((out, attn))
}

/// Weight matrices of a classical attention block, all `d×d`.
#[derive(Debug, Clone, Copy)]
pub struct AttentionWeights {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_o: Tensor,
}

/// `softmax(QKᵀ/√d) V W_O` for `x: L×d`. Returns the output and the `L×L`
/// attention matrix.
pub fn classical_attention(g: &mut Graph, x: Tensor, w: AttentionWeights) -> Result<(Tensor, Tensor)> {
    let q = g.matmul(x, w.w_q)?;
    let k = g.matmul(x, w.w_k)?;
    let v = g.matmul(x, w.w_v)?;
    let (heads, attn) = scaled_dot_attention(g, q, k, v)?;
    Ok((g.matmul(heads, w.w_o)?, attn))
}

/// Multi-head variant: `Q`, `K`, `V` are split column-wise into `n_heads`
/// blocks of `d/n_heads`, attended separately, concatenated and projected by
/// `W_O`. Returns the output and the per-head attention matrices.
pub fn classical_multihead(
    g: &mut Graph,
    x: Tensor,
    n_heads: usize,
    w: AttentionWeights,
) -> Result<(Tensor, Vec<Tensor>)> {
    let d = g.dim(w.w_q).1;
    if n_heads == 0 || !d.is_multiple_of(n_heads) {
        return Err(QatError::HeadDivisibility {
            what: "model width",
            dim: d,
            heads: n_heads,
        });
    }
    let dh = d / n_heads;
    let q = g.matmul(x, w.w_q)?;
    let k = g.matmul(x, w.w_k)?;
    let v = g.matmul(x, w.w_v)?;
    let mut outs = Vec::with_capacity(n_heads);
    let mut attns = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = g.slice_cols(q, h * dh, dh)?;
        let kh = g.slice_cols(k, h * dh, dh)?;
        let vh = g.slice_cols(v, h * dh, dh)?;
        let (o, a) = scaled_dot_attention(g, qh, kh, vh)?;
        outs.push(o);
        attns.push(a);
    }
    let cat = g.concat_cols(&outs)?;
    Ok((g.matmul(cat, w.w_o)?, attns))
}

/// Position-wise `ReLU(x W₁ + b₁) W₂ + b₂`.
pub fn ffn(g: &mut Graph, x: Tensor, w1: Tensor, b1: Tensor, w2: Tensor, b2: Tensor) -> Result<Tensor> {
    let h = linear(g, x, w1, Some(b1))?;
    let h = g.relu(h);
    linear(g, h, w2, Some(b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::stream;
    use ndarray::array;

    #[test]
    fn dropout_identity_cases() {
        let mut g = Graph::new();
        let x = g.constant(array![[1.0, 2.0], [3.0, 4.0]]);
        let mut rng = stream(1, [0, 0, 0]);
        assert_eq!(dropout(&mut g, x, 0.5, false, &mut rng).unwrap(), x);
        assert_eq!(dropout(&mut g, x, 0.0, true, &mut rng).unwrap(), x);
        let y = dropout(&mut g, x, 0.5, true, &mut rng).unwrap();
        for (a, b) in g.value(y).iter().zip(g.value(x).iter()) {
            assert!(*a == 0.0 || *a == 2.0 * b);
        }
    }

    #[test]
    fn singleton_attention_is_projection() {
        let mut g = Graph::new();
        let x = g.constant(array![[0.5, -1.0]]);
        let w = AttentionWeights {
            w_q: g.constant(array![[1.0, 2.0], [3.0, 4.0]]),
            w_k: g.constant(array![[0.5, 0.0], [0.0, 0.5]]),
            w_v: g.constant(array![[1.0, 1.0], [0.0, 2.0]]),
            w_o: g.constant(array![[2.0, 0.0], [1.0, 1.0]]),
        };
        let (out, attn) = classical_attention(&mut g, x, w).unwrap();
        assert_eq!(g.value(attn), &array![[1.0]]);
        let expect = array![[0.5, -1.0]]
            .dot(&array![[1.0, 1.0], [0.0, 2.0]])
            .dot(&array![[2.0, 0.0], [1.0, 1.0]]);
        assert_eq!(g.value(out), &expect);
    }

    #[test]
    fn zero_input_uniform_attention() {
        let mut g = Graph::new();
        let x = g.constant(Mat::zeros((3, 2)));
        let eye = g.constant(Mat::eye(2));
        let w = AttentionWeights {
            w_q: eye,
            w_k: eye,
            w_v: eye,
            w_o: eye,
        };
        let (out, attn) = classical_attention(&mut g, x, w).unwrap();
        assert!(g.value(attn).iter().all(|&a| (a - 1.0 / 3.0).abs() < 1e-15));
        assert!(g.value(out).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ffn_zero_weights_and_relu_kill() {
        let mut g = Graph::new();
        let x = g.constant(array![[1.0, -2.0], [0.3, 0.7]]);
        let w1 = g.constant(Mat::zeros((2, 4)));
        let b1 = g.constant(Mat::zeros((1, 4)));
        let w2 = g.constant(Mat::ones((4, 2)));
        let b2 = g.constant(array![[0.25, -0.5]]);
        let y = ffn(&mut g, x, w1, b1, w2, b2).unwrap();
        assert_eq!(g.value(y), &array![[0.25, -0.5], [0.25, -0.5]]);
        let b1 = g.constant(Mat::from_elem((1, 4), -10.0));
        let w1 = g.constant(Mat::ones((2, 4)));
        let y = ffn(&mut g, x, w1, b1, w2, b2).unwrap();
        assert_eq!(g.value(y), &array![[0.25, -0.5], [0.25, -0.5]]);
    }

    #[test]
    fn multihead_divisibility() {
        let mut g = Graph::new();
        let x = g.constant(Mat::zeros((2, 6)));
        let w = g.constant(Mat::eye(6));
        let weights = AttentionWeights {
            w_q: w,
            w_k: w,
            w_v: w,
            w_o: w,
        };
        assert!(matches!(
            classical_multihead(&mut g, x, 4, weights),
            Err(QatError::HeadDivisibility { .. })
        ));
    }
}
