//! Quantum attention layers: interference attention (single head), quantum
//! multi-head attention, and the superposition layer.
//!
//! Each layer exists twice: as a graph builder working on [`BoundParams`]
//! (used by the model, differentiable end to end) and as a plain forward
//! function over typed parameter structs. The plain functions build a
//! throwaway graph, so both paths share one implementation.
//!
//! Parameter names inside a [`ParamSet`] are `<prefix>.<field>`:
//!
//! | layer | arrays |
//! |-------|--------|
//! | QIA   | `w_red` d×n, `theta0` 1×n, `theta1` 1×n, `phase` 1×1 |
//! | QMHA  | `w_q`, `w_k`, `w_v`, `w_o` d×d; `head{h}.r` d_h×n, `head{h}.theta0`, `head{h}.theta1`, `head{h}.phase` |
//! | QSL   | `w_red` d×n, `theta` 1×n, `phi` 1×n, `w_exp` n×d |

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{QatError, Result};
use crate::nn::{BoundParams, Graph, Init, Mat, ParamSet, Tensor};
use crate::qkernel::{kernel_circuit, KernelParams};
use crate::statevector::{Angle, Circuit, Gate, Pauli};

/// Initial angle range for trainable rotations.
const ANGLE_INIT: Init = Init::Uniform { low: -PI, high: PI };

fn row(v: &[f64]) -> Mat {
    Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("1×n")
}

fn scalar(v: f64) -> Mat {
    Mat::from_elem((1, 1), v)
}

fn check_width(g: &Graph, x: Tensor, d: usize, layer: &str) -> Result<()> {
    if g.dim(x).1 != d {
        return Err(QatError::Shape(format!(
            "{layer}: input width {} but layer expects {d}",
            g.dim(x).1
        )));
    }
    Ok(())
}

/// Pauli-Z features of every row of `inputs` under the kernel circuit.
fn kernel_features(
    g: &mut Graph,
    inputs: Tensor,
    theta0: Tensor,
    theta1: Tensor,
    circuit: &Arc<Circuit>,
) -> Result<Tensor> {
    let kp = g.concat_cols(&[theta0, theta1])?;
    g.circuit_expectations(inputs, kp, Arc::clone(circuit), Pauli::Z)
}

/// `coeff · cos φ · νₐ ν_bᵀ` for row norms of `fa` and `fb`.
fn interference(g: &mut Graph, fa: Tensor, fb: Tensor, phase: Tensor, coeff: f64) -> Result<Tensor> {
    let na = g.row_norms(fa);
    let nb = g.row_norms(fb);
    let nbt = g.transpose(nb);
    let outer = g.matmul(na, nbt)?;
    let c = g.cos_phase(phase);
    let i = g.mul_scalar(outer, c)?;
    Ok(g.scale(i, coeff))
}

// ---------------------------------------------------------------------------
// Quantum interference attention

/// Single-head quantum interference attention.
#[derive(Debug, Clone)]
pub struct Qia {
    pub prefix: String,
    pub d: usize,
    pub n_qubits: usize,
    circuit: Arc<Circuit>,
}

pub struct QiaOutput {
    /// `A X`, L×d
    pub y: Tensor,
    /// Quantum features, L×n
    pub phi: Tensor,
    /// Attention weights, L×L
    pub attn: Tensor,
}

impl Qia {
    pub fn new(prefix: &str, d: usize, n_qubits: usize, depth: usize) -> Result<Self> {
        Ok(Self {
            prefix: prefix.to_string(),
            d,
            n_qubits,
            circuit: Arc::new(kernel_circuit(n_qubits, n_qubits, depth)?),
        })
    }

    fn name(&self, field: &str) -> String {
        format!("{}.{field}", self.prefix)
    }

    pub fn init(&self, params: &mut ParamSet, seed: u64) {
        let n = self.n_qubits;
        params.init(seed, &self.name("w_red"), self.d, n, Init::FanIn);
        params.init(seed, &self.name("theta0"), 1, n, ANGLE_INIT);
        params.init(seed, &self.name("theta1"), 1, n, ANGLE_INIT);
        params.init(seed, &self.name("phase"), 1, 1, Init::Constant(FRAC_PI_4));
    }

    /// `x` is one sequence, L×d.
    pub fn forward(&self, g: &mut Graph, p: &BoundParams, x: Tensor) -> Result<QiaOutput> {
        check_width(g, x, self.d, "qia")?;
        let z = g.matmul(x, p.get(&self.name("w_red"))?)?;
        let phi = kernel_features(
            g,
            z,
            p.get(&self.name("theta0"))?,
            p.get(&self.name("theta1"))?,
            &self.circuit,
        )?;
        let phit = g.transpose(phi);
        let dots = g.matmul(phi, phit)?;
        let inter = interference(g, phi, phi, p.get(&self.name("phase"))?, 2.0)?;
        let logits = g.add(dots, inter)?;
        let attn = g.softmax_rows(logits);
        let y = g.matmul(attn, x)?;
        Ok(QiaOutput { y, phi, attn })
    }
}

/// Typed QIA parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QiaParams {
    /// d×n
    pub w_red: Mat,
    pub kernel: KernelParams,
    pub phase: f64,
}

impl QiaParams {
    pub fn to_param_set(&self, prefix: &str) -> ParamSet {
        let mut set = ParamSet::new();
        set.insert(format!("{prefix}.w_red"), self.w_red.clone());
        set.insert(format!("{prefix}.theta0"), row(&self.kernel.theta0));
        set.insert(format!("{prefix}.theta1"), row(&self.kernel.theta1));
        set.insert(format!("{prefix}.phase"), scalar(self.phase));
        set
    }

    pub fn layer(&self, prefix: &str) -> Result<Qia> {
        if self.w_red.ncols() != self.kernel.n_qubits() {
            return Err(QatError::Shape(format!(
                "w_red has {} columns for {} qubits",
                self.w_red.ncols(),
                self.kernel.n_qubits()
            )));
        }
        Qia::new(prefix, self.w_red.nrows(), self.kernel.n_qubits(), self.kernel.depth)
    }
}

/// Values of a QIA forward pass over one batch.
#[derive(Debug, Clone)]
pub struct QiaForward {
    pub y: Vec<Mat>,
    pub phi: Vec<Mat>,
    pub attn: Vec<Mat>,
}

/// QIA over a batch of sequences, each L×d.
pub fn qia_forward(xs: &[Mat], p: &QiaParams) -> Result<QiaForward> {
    let layer = p.layer("qia")?;
    let set = p.to_param_set("qia");
    let mut out = QiaForward {
        y: Vec::new(),
        phi: Vec::new(),
        attn: Vec::new(),
    };
    for x in xs {
        if x.nrows() == 0 {
            return Err(QatError::Empty("sequence"));
        }
        let mut g = Graph::new();
        let bound = set.bind(&mut g);
        let xt = g.constant(x.clone());
        let o = layer.forward(&mut g, &bound, xt)?;
        out.y.push(g.value(o.y).clone());
        out.phi.push(g.value(o.phi).clone());
        out.attn.push(g.value(o.attn).clone());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Quantum multi-head attention

#[derive(Debug, Clone)]
pub struct Qmha {
    pub prefix: String,
    pub d: usize,
    pub n_heads: usize,
    pub n_qubits: usize,
    /// Interference factor `c_h`; defaults to the head count.
    pub interference_coeff: f64,
    circuit: Arc<Circuit>,
}

pub struct QmhaOutput {
    /// L×d
    pub out: Tensor,
    /// One L×L attention matrix per head.
    pub attn: Vec<Tensor>,
}

impl Qmha {
    pub fn new(
        prefix: &str,
        d: usize,
        n_heads: usize,
        n_qubits: usize,
        depth: usize,
        interference_coeff: Option<f64>,
    ) -> Result<Self> {
        if n_heads == 0 || !d.is_multiple_of(n_heads) {
            return Err(QatError::HeadDivisibility {
                what: "model width",
                dim: d,
                heads: n_heads,
            });
        }
        Ok(Self {
            prefix: prefix.to_string(),
            d,
            n_heads,
            n_qubits,
            interference_coeff: interference_coeff.unwrap_or(n_heads as f64),
            circuit: Arc::new(kernel_circuit(n_qubits, n_qubits, depth)?),
        })
    }

    pub fn head_dim(&self) -> usize {
        self.d / self.n_heads
    }

    fn name(&self, field: &str) -> String {
        format!("{}.{field}", self.prefix)
    }

    fn head_name(&self, h: usize, field: &str) -> String {
        format!("{}.head{h}.{field}", self.prefix)
    }

    pub fn init(&self, params: &mut ParamSet, seed: u64) {
        for w in ["w_q", "w_k", "w_v", "w_o"] {
            params.init(seed, &self.name(w), self.d, self.d, Init::FanIn);
        }
        let n = self.n_qubits;
        for h in 0..self.n_heads {
            params.init(seed, &self.head_name(h, "r"), self.head_dim(), n, Init::FanIn);
            params.init(seed, &self.head_name(h, "theta0"), 1, n, ANGLE_INIT);
            params.init(seed, &self.head_name(h, "theta1"), 1, n, ANGLE_INIT);
            let phase = FRAC_PI_4 + h as f64 * FRAC_PI_8;
            params.init(seed, &self.head_name(h, "phase"), 1, 1, Init::Constant(phase));
        }
    }

    /// `x` is one sequence, L×d.
    pub fn forward(&self, g: &mut Graph, p: &BoundParams, x: Tensor) -> Result<QmhaOutput> {
        check_width(g, x, self.d, "qmha")?;
        let q = g.matmul(x, p.get(&self.name("w_q"))?)?;
        let k = g.matmul(x, p.get(&self.name("w_k"))?)?;
        let v = g.matmul(x, p.get(&self.name("w_v"))?)?;
        let dh = self.head_dim();
        let mut heads = Vec::with_capacity(self.n_heads);
        let mut attn = Vec::with_capacity(self.n_heads);
        for h in 0..self.n_heads {
            let r = p.get(&self.head_name(h, "r"))?;
            let theta0 = p.get(&self.head_name(h, "theta0"))?;
            let theta1 = p.get(&self.head_name(h, "theta1"))?;
            let qh = g.slice_cols(q, h * dh, dh)?;
            let kh = g.slice_cols(k, h * dh, dh)?;
            let vh = g.slice_cols(v, h * dh, dh)?;
            let qr = g.matmul(qh, r)?;
            let kr = g.matmul(kh, r)?;
            let fq = kernel_features(g, qr, theta0, theta1, &self.circuit)?;
            let fk = kernel_features(g, kr, theta0, theta1, &self.circuit)?;
            let fkt = g.transpose(fk);
            let kern = g.matmul(fq, fkt)?;
            let phase = p.get(&self.head_name(h, "phase"))?;
            let inter = interference(g, fq, fk, phase, self.interference_coeff)?;
            let s = g.add(kern, inter)?;
            let s = g.scale(s, 1.0 / (dh as f64).sqrt());
            let a = g.softmax_rows(s);
            heads.push(g.matmul(a, vh)?);
            attn.push(a);
        }
        let cat = g.concat_cols(&heads)?;
        let out = g.matmul(cat, p.get(&self.name("w_o"))?)?;
        Ok(QmhaOutput { out, attn })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmhaHead {
    /// d_h×n
    pub r: Mat,
    pub kernel: KernelParams,
    pub phase: f64,
}

/// Typed QMHA parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QmhaParams {
    pub w_q: Mat,
    pub w_k: Mat,
    pub w_v: Mat,
    pub w_o: Mat,
    pub heads: Vec<QmhaHead>,
    pub interference_coeff: Option<f64>,
}

impl QmhaParams {
    pub fn to_param_set(&self, prefix: &str) -> ParamSet {
        let mut set = ParamSet::new();
        for (name, w) in [
            ("w_q", &self.w_q),
            ("w_k", &self.w_k),
            ("w_v", &self.w_v),
            ("w_o", &self.w_o),
        ] {
            set.insert(format!("{prefix}.{name}"), w.clone());
        }
        for (h, head) in self.heads.iter().enumerate() {
            set.insert(format!("{prefix}.head{h}.r"), head.r.clone());
            set.insert(format!("{prefix}.head{h}.theta0"), row(&head.kernel.theta0));
            set.insert(format!("{prefix}.head{h}.theta1"), row(&head.kernel.theta1));
            set.insert(format!("{prefix}.head{h}.phase"), scalar(head.phase));
        }
        set
    }

    pub fn layer(&self, prefix: &str) -> Result<Qmha> {
        let first = self.heads.first().ok_or(QatError::Empty("attention heads"))?;
        let d = self.w_q.nrows();
        let layer = Qmha::new(
            prefix,
            d,
            self.heads.len(),
            first.kernel.n_qubits(),
            first.kernel.depth,
            self.interference_coeff,
        )?;
        for head in &self.heads {
            if head.r.dim() != (layer.head_dim(), layer.n_qubits) {
                return Err(QatError::Shape(format!(
                    "head reduction is {:?}, expected {:?}",
                    head.r.dim(),
                    (layer.head_dim(), layer.n_qubits)
                )));
            }
        }
        Ok(layer)
    }
}

/// Output and per-head attention of one sequence.
#[derive(Debug, Clone)]
pub struct QmhaForward {
    pub out: Mat,
    pub attn: Vec<Mat>,
}

/// QMHA over one sequence, L×d.
pub fn qmha_forward(x: &Mat, p: &QmhaParams) -> Result<QmhaForward> {
    let layer = p.layer("qmha")?;
    let set = p.to_param_set("qmha");
    let mut g = Graph::new();
    let bound = set.bind(&mut g);
    let xt = g.constant(x.clone());
    let o = layer.forward(&mut g, &bound, xt)?;
    Ok(QmhaForward {
        out: g.value(o.out).clone(),
        attn: o.attn.iter().map(|&a| g.value(a).clone()).collect(),
    })
}

// ---------------------------------------------------------------------------
// Quantum superposition layer

/// Superposition circuit on `n` wires: H on every wire, `RY(θⱼ zⱼ)`,
/// `RZ(φⱼ zⱼ)`, then a CNOT chain. Slots are `[θ…, φ…]`, features `z`.
pub fn superposition_circuit(n: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n, 2 * n)?;
    for j in 0..n {
        c.push(Gate::H(j))?;
    }
    for j in 0..n {
        c.push(Gate::Ry(
            j,
            Angle::ParamFeature {
                slot: j,
                index: j,
                scale: 1.0,
            },
        ))?;
    }
    for j in 0..n {
        c.push(Gate::Rz(
            j,
            Angle::ParamFeature {
                slot: n + j,
                index: j,
                scale: 1.0,
            },
        ))?;
    }
    c.push_cnot_chain()?;
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct Qsl {
    pub prefix: String,
    pub d: usize,
    pub n_qubits: usize,
    circuit: Arc<Circuit>,
}

pub struct QslOutput {
    /// `S W_exp + h`, L×d
    pub out: Tensor,
    /// Pauli-X features, L×n
    pub features: Tensor,
}

impl Qsl {
    pub fn new(prefix: &str, d: usize, n_qubits: usize) -> Result<Self> {
        Ok(Self {
            prefix: prefix.to_string(),
            d,
            n_qubits,
            circuit: Arc::new(superposition_circuit(n_qubits)?),
        })
    }

    fn name(&self, field: &str) -> String {
        format!("{}.{field}", self.prefix)
    }

    pub fn init(&self, params: &mut ParamSet, seed: u64) {
        let n = self.n_qubits;
        params.init(seed, &self.name("w_red"), self.d, n, Init::FanIn);
        params.init(seed, &self.name("theta"), 1, n, ANGLE_INIT);
        params.init(seed, &self.name("phi"), 1, n, ANGLE_INIT);
        params.init(seed, &self.name("w_exp"), n, self.d, Init::FanIn);
    }

    /// `h` is one sequence, L×d.
    pub fn forward(&self, g: &mut Graph, p: &BoundParams, h: Tensor) -> Result<QslOutput> {
        check_width(g, h, self.d, "qsl")?;
        let z = g.matmul(h, p.get(&self.name("w_red"))?)?;
        let angles = g.concat_cols(&[p.get(&self.name("theta"))?, p.get(&self.name("phi"))?])?;
        let features = g.circuit_expectations(z, angles, Arc::clone(&self.circuit), Pauli::X)?;
        let expanded = g.matmul(features, p.get(&self.name("w_exp"))?)?;
        let out = g.add(expanded, h)?;
        Ok(QslOutput { out, features })
    }
}

/// Typed QSL parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QslParams {
    /// d×n
    pub w_red2: Mat,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// n×d
    pub w_exp2: Mat,
}

impl QslParams {
    pub fn to_param_set(&self, prefix: &str) -> ParamSet {
        let mut set = ParamSet::new();
        set.insert(format!("{prefix}.w_red"), self.w_red2.clone());
        set.insert(format!("{prefix}.theta"), row(&self.theta));
        set.insert(format!("{prefix}.phi"), row(&self.phi));
        set.insert(format!("{prefix}.w_exp"), self.w_exp2.clone());
        set
    }

    pub fn layer(&self, prefix: &str) -> Result<Qsl> {
        let (d, n) = self.w_red2.dim();
        if self.theta.len() != n || self.phi.len() != n || self.w_exp2.dim() != (n, d) {
            return Err(QatError::Shape(format!(
                "qsl: w_red {:?}, theta {}, phi {}, w_exp {:?}",
                self.w_red2.dim(),
                self.theta.len(),
                self.phi.len(),
                self.w_exp2.dim()
            )));
        }
        Qsl::new(prefix, d, n)
    }
}

/// QSL over a batch of sequences, each L×d. Returns outputs and features.
pub fn qsl_forward(hs: &[Mat], p: &QslParams) -> Result<(Vec<Mat>, Vec<Mat>)> {
    let layer = p.layer("qsl")?;
    let set = p.to_param_set("qsl");
    let mut outs = Vec::new();
    let mut feats = Vec::new();
    for h in hs {
        let mut g = Graph::new();
        let bound = set.bind(&mut g);
        let ht = g.constant(h.clone());
        let o = layer.forward(&mut g, &bound, ht)?;
        outs.push(g.value(o.out).clone());
        feats.push(g.value(o.features).clone());
    }
    Ok((outs, feats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::FRAC_PI_2;

    fn qia_params(d: usize, n: usize, phase: f64) -> QiaParams {
        let w_red = Mat::from_shape_fn((d, n), |(i, j)| 0.3 * ((i * n + j) as f64).sin());
        let kernel = KernelParams::new(
            (0..n).map(|i| 0.7 + 0.2 * i as f64).collect(),
            (0..n).map(|i| -0.4 + 0.5 * i as f64).collect(),
        )
        .unwrap();
        QiaParams { w_red, kernel, phase }
    }

    fn seq(l: usize, d: usize) -> Mat {
        Mat::from_shape_fn((l, d), |(i, j)| ((3 * i + 7 * j) as f64 * 0.37).cos())
    }

    #[test]
    fn single_token_attention_is_one() {
        let x = seq(1, 4);
        let out = qia_forward(std::slice::from_ref(&x), &qia_params(4, 2, FRAC_PI_4)).unwrap();
        assert_eq!(out.attn[0], array![[1.0]]);
        assert_eq!(out.y[0], x);
    }

    #[test]
    fn rows_are_stochastic_and_features_bounded() {
        let out = qia_forward(&[seq(5, 4)], &qia_params(4, 3, 0.3)).unwrap();
        for r in out.attn[0].rows() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
            assert!(r.iter().all(|&a| a >= 0.0));
        }
        assert!(out.phi[0].iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn half_pi_phase_gives_kernel_softmax() {
        let out = qia_forward(&[seq(4, 4)], &qia_params(4, 2, FRAC_PI_2)).unwrap();
        let phi = &out.phi[0];
        let mut g = Graph::new();
        let d = g.constant(phi.dot(&phi.t()));
        let a = g.softmax_rows(d);
        assert_eq!(g.value(a), &out.attn[0]);
    }

    #[test]
    fn qsl_zero_expansion_is_residual() {
        let p = QslParams {
            w_red2: Mat::from_elem((4, 2), 0.3),
            theta: vec![0.5, -1.0],
            phi: vec![0.2, 0.9],
            w_exp2: Mat::zeros((2, 4)),
        };
        let h = seq(3, 4);
        let (out, feats) = qsl_forward(std::slice::from_ref(&h), &p).unwrap();
        assert_eq!(out[0], h);
        assert!(feats[0].iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn qmha_head_divisibility() {
        assert!(matches!(
            Qmha::new("m", 6, 4, 2, 1, None),
            Err(QatError::HeadDivisibility { .. })
        ));
        assert_eq!(Qmha::new("m", 8, 2, 2, 1, None).unwrap().interference_coeff, 2.0);
    }

    #[test]
    fn qmha_phase_schedule() {
        let layer = Qmha::new("m", 8, 3, 2, 1, None);
        assert!(layer.is_err());
        let layer = Qmha::new("m", 6, 3, 2, 1, None).unwrap();
        let mut set = ParamSet::new();
        layer.init(&mut set, 5);
        for h in 0..3 {
            let phase = set.get(&format!("m.head{h}.phase")).unwrap()[[0, 0]];
            assert_eq!(phase, FRAC_PI_4 + h as f64 * FRAC_PI_8);
        }
    }

    #[test]
    fn superposition_circuit_layout() {
        let c = superposition_circuit(3).unwrap();
        let kinds: Vec<_> = c.gates().iter().map(|g| g.kind()).collect();
        use crate::statevector::GateKind::*;
        assert_eq!(kinds, vec![H, H, H, Ry, Ry, Ry, Rz, Rz, Rz, Cnot, Cnot]);
    }
}
