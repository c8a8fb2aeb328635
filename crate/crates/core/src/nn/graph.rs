//! Reverse-mode differentiation over 2-D `f64` arrays.
//!
//! A [`Graph`] is an append-only arena of nodes. Every op evaluates eagerly
//! and records a backward closure; [`Graph::backward`] walks the arena in
//! reverse insertion order, which is a valid topological order because a
//! node can only reference nodes created before it. Vectors are `1×n`
//! matrices and scalars are `1×1`.

use std::sync::Arc;

use ndarray::{s, Array2, Axis};
use rayon::prelude::*;

use crate::error::{QatError, Result};
use crate::statevector::{Circuit, Pauli};

pub type Mat = Array2<f64>;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tensor(usize);

impl Tensor {
    pub fn id(self) -> usize {
        self.0
    }
}

/// `(grad_out, output, inputs) -> grads for each input`
type BackwardFn = Box<dyn Fn(&Mat, &Mat, &[&Mat]) -> Vec<Mat> + Send + Sync>;

struct Node {
    value: Mat,
    parents: Vec<usize>,
    backward: Option<BackwardFn>,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every node that required one.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Mat>>,
}

impl Gradients {
    pub fn get(&self, t: Tensor) -> Option<&Mat> {
        self.grads.get(t.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, t: Tensor) -> Option<Mat> {
        self.grads.get_mut(t.0).and_then(Option::take)
    }
}

fn shape(m: &Mat) -> (usize, usize) {
    m.dim()
}

fn mismatch(op: &str, a: &Mat, b: &Mat) -> QatError {
    QatError::Shape(format!("{op}: {:?} vs {:?}", a.dim(), b.dim()))
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Mat, parents: Vec<usize>, backward: Option<BackwardFn>) -> Tensor {
        let requires_grad = parents.iter().any(|&p| self.nodes[p].requires_grad);
        let backward = if requires_grad { backward } else { None };
        self.nodes.push(Node {
            value,
            parents,
            backward,
            requires_grad,
        });
        Tensor(self.nodes.len() - 1)
    }

    fn op(
        &mut self,
        value: Mat,
        parents: &[Tensor],
        backward: impl Fn(&Mat, &Mat, &[&Mat]) -> Vec<Mat> + Send + Sync + 'static,
    ) -> Tensor {
        let parents = parents.iter().map(|t| t.0).collect();
        self.push(value, parents, Some(Box::new(backward)))
    }

    pub fn constant(&mut self, value: Mat) -> Tensor {
        self.push(value, Vec::new(), None)
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Mat) -> Tensor {
        self.nodes.push(Node {
            value,
            parents: Vec::new(),
            backward: None,
            requires_grad: true,
        });
        Tensor(self.nodes.len() - 1)
    }

    pub fn value(&self, t: Tensor) -> &Mat {
        &self.nodes[t.0].value
    }

    pub fn dim(&self, t: Tensor) -> (usize, usize) {
        shape(self.value(t))
    }

    pub fn backward(&self, loss: Tensor) -> Result<Gradients> {
        let node = self.nodes.get(loss.0).ok_or(QatError::UnknownNode(loss.0))?;
        let (rows, cols) = shape(&node.value);
        if (rows, cols) != (1, 1) {
            return Err(QatError::NotScalar { rows, cols });
        }
        let mut grads: Vec<Option<Mat>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Mat::ones((1, 1)));
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            if let Some(bw) = &node.backward {
                let inputs: Vec<&Mat> = node.parents.iter().map(|&p| &self.nodes[p].value).collect();
                let parent_grads = bw(&g, &node.value, &inputs);
                debug_assert_eq!(parent_grads.len(), node.parents.len());
                for (&p, pg) in node.parents.iter().zip(parent_grads) {
                    if !self.nodes[p].requires_grad {
                        continue;
                    }
                    match &mut grads[p] {
                        Some(acc) => *acc += &pg,
                        slot @ None => *slot = Some(pg),
                    }
                }
            }
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }

    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.ncols() != vb.nrows() {
            return Err(mismatch("matmul", va, vb));
        }
        let out = va.dot(vb);
        Ok(self.op(out, &[a, b], |g, _, x| vec![g.dot(&x[1].t()), x[0].t().dot(g)]))
    }

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dim() != vb.dim() {
            return Err(mismatch("add", va, vb));
        }
        let out = va + vb;
        Ok(self.op(out, &[a, b], |g, _, _| vec![g.clone(), g.clone()]))
    }

    /// `a + 1·bias` with `bias` of shape `1×cols`.
    pub fn add_row(&mut self, a: Tensor, bias: Tensor) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(bias));
        if vb.nrows() != 1 || vb.ncols() != va.ncols() {
            return Err(mismatch("add_row", va, vb));
        }
        let out = va + vb;
        Ok(self.op(out, &[a, bias], |g, _, _| {
            vec![g.clone(), g.sum_axis(Axis(0)).insert_axis(Axis(0))]
        }))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.dim() != vb.dim() {
            return Err(mismatch("mul", va, vb));
        }
        let out = va * vb;
        Ok(self.op(out, &[a, b], |g, _, x| vec![g * x[1], g * x[0]]))
    }

    pub fn scale(&mut self, a: Tensor, c: f64) -> Tensor {
        let out = self.value(a) * c;
        self.op(out, &[a], move |g, _, _| vec![g * c])
    }

    /// `a · s` for a `1×1` tensor `s`.
    pub fn mul_scalar(&mut self, a: Tensor, s: Tensor) -> Result<Tensor> {
        let vs = self.value(s);
        if vs.dim() != (1, 1) {
            return Err(QatError::Shape(format!("mul_scalar: scalar is {:?}", vs.dim())));
        }
        let out = self.value(a) * vs[[0, 0]];
        Ok(self.op(out, &[a, s], |g, _, x| {
            let gs = (g * x[0]).sum();
            vec![g * x[1][[0, 0]], Mat::from_elem((1, 1), gs)]
        }))
    }

    /// `cos φ` evaluated as `sin(π/2 − φ)`, which is exactly zero at `φ = π/2`.
    pub fn cos_phase(&mut self, phi: Tensor) -> Tensor {
        let out = self.value(phi).mapv(|p| (std::f64::consts::FRAC_PI_2 - p).sin());
        self.op(out, &[phi], |g, _, x| {
            vec![g * &x[0].mapv(|p| -(std::f64::consts::FRAC_PI_2 - p).cos())]
        })
    }

    pub fn transpose(&mut self, a: Tensor) -> Tensor {
        let out = self.value(a).t().to_owned();
        self.op(out, &[a], |g, _, _| vec![g.t().to_owned()])
    }

    pub fn relu(&mut self, a: Tensor) -> Tensor {
        let out = self.value(a).mapv(|v| v.max(0.0));
        self.op(out, &[a], |g, _, x| {
            let mut d = g.clone();
            d.zip_mut_with(x[0], |gi, &xi| {
                if xi <= 0.0 {
                    *gi = 0.0
                }
            });
            vec![d]
        })
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, a: Tensor) -> Tensor {
        let mut out = self.value(a).clone();
        for mut row in out.rows_mut() {
            let m = row.fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
            row.mapv_inplace(|v| (v - m).exp());
            let z = row.sum();
            row.mapv_inplace(|v| v / z);
        }
        self.op(out, &[a], |g, y, _| {
            let dot = (g * y).sum_axis(Axis(1)).insert_axis(Axis(1));
            vec![y * &(g - &dot)]
        })
    }

    /// Normalizes each row to mean 0 and variance 1, then applies `γ`, `β`
    /// (both `1×cols`).
    pub fn layer_norm(&mut self, x: Tensor, gamma: Tensor, beta: Tensor, eps: f64) -> Result<Tensor> {
        let (vx, vg, vb) = (self.value(x), self.value(gamma), self.value(beta));
        let d = vx.ncols();
        if vg.dim() != (1, d) || vb.dim() != (1, d) {
            return Err(mismatch("layer_norm", vx, vg));
        }
        let mean = vx.mean_axis(Axis(1)).unwrap().insert_axis(Axis(1));
        let centered = vx - &mean;
        let var = centered
            .mapv(|v| v * v)
            .mean_axis(Axis(1))
            .unwrap()
            .insert_axis(Axis(1));
        let inv_std = var.mapv(|v| 1.0 / (v + eps).sqrt());
        let xhat = &centered * &inv_std;
        let out = &xhat * vg + vb;
        Ok(self.op(out, &[x, gamma, beta], move |g, _, inputs| {
            let gamma = inputs[1];
            let d_gamma = (g * &xhat).sum_axis(Axis(0)).insert_axis(Axis(0));
            let d_beta = g.sum_axis(Axis(0)).insert_axis(Axis(0));
            let dxhat = g * gamma;
            let n = d as f64;
            let mean_dxhat = dxhat.mean_axis(Axis(1)).unwrap().insert_axis(Axis(1));
            let mean_dxhat_xhat = (&dxhat * &xhat).sum_axis(Axis(1)).insert_axis(Axis(1)) / n;
            let dx = (&dxhat - &mean_dxhat - &(&xhat * &mean_dxhat_xhat)) * &inv_std;
            vec![dx, d_gamma, d_beta]
        }))
    }

    /// Column means: `L×d → 1×d`.
    pub fn mean_rows(&mut self, a: Tensor) -> Tensor {
        let va = self.value(a);
        let l = va.nrows();
        let out = va.mean_axis(Axis(0)).unwrap().insert_axis(Axis(0));
        self.op(out, &[a], move |g, _, _| {
            vec![Mat::from_shape_fn((l, g.ncols()), |(_, j)| g[[0, j]] / l as f64)]
        })
    }

    pub fn sum_all(&mut self, a: Tensor) -> Tensor {
        let va = self.value(a);
        let dim = va.dim();
        let out = Mat::from_elem((1, 1), va.sum());
        self.op(out, &[a], move |g, _, _| vec![Mat::from_elem(dim, g[[0, 0]])])
    }

    /// Rows of `table` selected by `ids`.
    pub fn embedding(&mut self, table: Tensor, ids: &[usize]) -> Result<Tensor> {
        let vt = self.value(table);
        if let Some(&id) = ids.iter().find(|&&i| i >= vt.nrows()) {
            return Err(QatError::TokenOutOfRange {
                id,
                vocab_size: vt.nrows(),
            });
        }
        let out = vt.select(Axis(0), ids);
        let ids = ids.to_vec();
        Ok(self.op(out, &[table], move |g, _, x| {
            let mut d = Mat::zeros(x[0].dim());
            for (r, &id) in ids.iter().enumerate() {
                let mut row = d.row_mut(id);
                row += &g.row(r);
            }
            vec![d]
        }))
    }

    /// Euclidean norm of every row: `L×n → L×1`. The gradient at a zero row
    /// is taken as zero.
    pub fn row_norms(&mut self, a: Tensor) -> Tensor {
        let out = self
            .value(a)
            .map_axis(Axis(1), |r| r.dot(&r).sqrt())
            .insert_axis(Axis(1));
        self.op(out, &[a], |g, y, x| {
            let mut d = x[0].clone();
            for (r, mut row) in d.rows_mut().into_iter().enumerate() {
                let nu = y[[r, 0]];
                let k = if nu > 0.0 { g[[r, 0]] / nu } else { 0.0 };
                row.mapv_inplace(|v| v * k);
            }
            vec![d]
        })
    }

    pub fn slice_cols(&mut self, a: Tensor, start: usize, len: usize) -> Result<Tensor> {
        let va = self.value(a);
        if start + len > va.ncols() {
            return Err(QatError::Shape(format!(
                "slice_cols {start}..{} of {} columns",
                start + len,
                va.ncols()
            )));
        }
        let out = va.slice(s![.., start..start + len]).to_owned();
        Ok(self.op(out, &[a], move |g, _, x| {
            let mut d = Mat::zeros(x[0].dim());
            d.slice_mut(s![.., start..start + len]).assign(g);
            vec![d]
        }))
    }

    pub fn concat_cols(&mut self, parts: &[Tensor]) -> Result<Tensor> {
        self.concat(parts, Axis(1))
    }

    pub fn concat_rows(&mut self, parts: &[Tensor]) -> Result<Tensor> {
        self.concat(parts, Axis(0))
    }

    fn concat(&mut self, parts: &[Tensor], axis: Axis) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(QatError::Empty("concat parts"));
        }
        let views: Vec<_> = parts.iter().map(|&t| self.value(t).view()).collect();
        let out = ndarray::concatenate(axis, &views).map_err(|e| QatError::Shape(format!("concat: {e}")))?;
        let sizes: Vec<usize> = views.iter().map(|v| v.len_of(axis)).collect();
        Ok(self.op(out, parts, move |g, _, _| {
            let mut start = 0;
            sizes
                .iter()
                .map(|&n| {
                    let part = g.slice_axis(axis, (start..start + n).into()).to_owned();
                    start += n;
                    part
                })
                .collect()
        }))
    }

    /// Mean cross-entropy of row-wise logits `B×C` against `labels`.
    pub fn cross_entropy(&mut self, logits: Tensor, labels: &[usize]) -> Result<Tensor> {
        let vl = self.value(logits);
        let (b, c) = vl.dim();
        if labels.len() != b {
            return Err(QatError::Shape(format!(
                "cross_entropy: {b} logit rows, {} labels",
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= c) {
            return Err(QatError::LabelOutOfRange { label, n_classes: c });
        }
        let mut probs = vl.clone();
        let mut loss = 0.0;
        for (mut row, &y) in probs.rows_mut().into_iter().zip(labels) {
            let m = row.fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - row[y];
            row.mapv_inplace(|v| (v - lse).exp());
        }
        let out = Mat::from_elem((1, 1), loss / b as f64);
        let labels = labels.to_vec();
        Ok(self.op(out, &[logits], move |g, _, _| {
            let mut d = probs.clone();
            for (r, &y) in labels.iter().enumerate() {
                d[[r, y]] -= 1.0;
            }
            vec![d * (g[[0, 0]] / b as f64)]
        }))
    }

    /// Pauli expectations of `circuit` for every row of `inputs`, with the
    /// `1×n_params` tensor `params` bound to the circuit's slots. Input rows
    /// are evaluated in parallel; the backward pass uses the parameter-shift
    /// rule and reduces per-row contributions in row order.
    pub fn circuit_expectations(
        &mut self,
        inputs: Tensor,
        params: Tensor,
        circuit: Arc<Circuit>,
        pauli: Pauli,
    ) -> Result<Tensor> {
        let (vi, vp) = (self.value(inputs), self.value(params));
        if vp.dim() != (1, circuit.n_params()) {
            return Err(QatError::ParamCount {
                expected: circuit.n_params(),
                got: vp.len(),
            });
        }
        let p: Vec<f64> = vp.iter().copied().collect();
        let rows: Vec<Vec<f64>> = vi.rows().into_iter().map(|r| r.to_vec()).collect();
        let feats = rows
            .par_iter()
            .map(|x| circuit.expectations(&p, x, pauli))
            .collect::<Result<Vec<_>>>()?;
        let n = circuit.n_qubits();
        let out = Mat::from_shape_fn((rows.len(), n), |(r, w)| feats[r][w]);
        Ok(self.op(out, &[inputs, params], move |g, _, x| {
            let p: Vec<f64> = x[1].iter().copied().collect();
            let row_grads: Vec<(Vec<f64>, Vec<f64>)> = rows
                .par_iter()
                .enumerate()
                .map(|(r, feat)| {
                    let jac = circuit
                        .gradients(&p, feat, pauli)
                        .expect("circuit validated in forward pass");
                    let mut dx = vec![0.0; feat.len()];
                    let mut dp = vec![0.0; p.len()];
                    for w in 0..n {
                        let gw = g[[r, w]];
                        for (d, j) in dx.iter_mut().zip(&jac.d_features[w]) {
                            *d += gw * j;
                        }
                        for (d, j) in dp.iter_mut().zip(&jac.d_params[w]) {
                            *d += gw * j;
                        }
                    }
                    (dx, dp)
                })
                .collect();
            let mut d_inputs = Mat::zeros(x[0].dim());
            let mut d_params = Mat::zeros(x[1].dim());
            for (r, (dx, dp)) in row_grads.iter().enumerate() {
                for (c, v) in dx.iter().enumerate() {
                    d_inputs[[r, c]] = *v;
                }
                for (k, v) in dp.iter().enumerate() {
                    d_params[[0, k]] += v;
                }
            }
            vec![d_inputs, d_params]
        }))
    }
}
