//! Full encoders: the quantum model and its size-matched classical baseline.
//!
//! Both share the same scaffolding per sequence:
//!
//! ```text
//! E   = Embed(ids)
//! H1  = LayerNorm(E  + Dropout(Attention(E)))
//! H2  = LayerNorm(H1 + Dropout(Block(H1)))
//! z   = Dropout(ReLU(mean_rows(H2) W1 + b1))
//! out = z W2 + b2
//! ```
//!
//! `Attention` is QIA / QMHA or classical (multi-head) attention and `Block`
//! is the superposition layer or the position-wise FFN.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::attention::{Qia, Qmha, Qsl};
use crate::error::{QatError, Result};
use crate::nn::rng::stream;
use crate::nn::{
    classical_attention, classical_multihead, dropout, ffn, linear, AttentionWeights, BoundParams, Graph, Init, Mat,
    ParamSet, Tensor, LAYER_NORM_EPS,
};

pub type ModelParams = ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttentionKind {
    QuantumSingle,
    QuantumMulti,
    ClassicalSingle,
    ClassicalMulti,
}

impl AttentionKind {
    pub const ALL: [AttentionKind; 4] = [
        AttentionKind::QuantumSingle,
        AttentionKind::QuantumMulti,
        AttentionKind::ClassicalSingle,
        AttentionKind::ClassicalMulti,
    ];

    pub fn is_quantum(self) -> bool {
        matches!(self, AttentionKind::QuantumSingle | AttentionKind::QuantumMulti)
    }

    pub fn is_multi(self) -> bool {
        matches!(self, AttentionKind::QuantumMulti | AttentionKind::ClassicalMulti)
    }
}

impl fmt::Display for AttentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttentionKind::QuantumSingle => "quantum_single",
            AttentionKind::QuantumMulti => "quantum_multi",
            AttentionKind::ClassicalSingle => "classical_single",
            AttentionKind::ClassicalMulti => "classical_multi",
        })
    }
}

impl FromStr for AttentionKind {
    type Err = QatError;

    fn from_str(s: &str) -> Result<Self> {
        AttentionKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| QatError::Config(format!("unknown attention_kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub seq_len: usize,
    pub n_qubits: usize,
    pub attention_kind: AttentionKind,
    pub n_heads: usize,
    pub n_classes: usize,
    pub dropout: f64,
    /// Overrides the multi-head interference factor (default: head count).
    pub interference_coeff: Option<f64>,
    pub kernel_depth: usize,
    /// Classifier hidden width; defaults to `embed_dim`.
    pub classifier_hidden: Option<usize>,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 10_000,
            embed_dim: 64,
            seq_len: 64,
            n_qubits: 6,
            attention_kind: AttentionKind::QuantumSingle,
            n_heads: 1,
            n_classes: 2,
            dropout: 0.1,
            interference_coeff: None,
            kernel_depth: 1,
            classifier_hidden: None,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.embed_dim == 0 || self.n_classes == 0 || self.seq_len == 0 {
            return Err(QatError::Config(
                "vocab_size >= 2, embed_dim, seq_len and n_classes > 0 required".into(),
            ));
        }
        if self.attention_kind.is_multi() && (self.n_heads == 0 || !self.embed_dim.is_multiple_of(self.n_heads)) {
            return Err(QatError::HeadDivisibility {
                what: "embed_dim",
                dim: self.embed_dim,
                heads: self.n_heads,
            });
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(QatError::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn hidden(&self) -> usize {
        self.classifier_hidden.unwrap_or(self.embed_dim)
    }
}

/// Identifies the dropout masks of one training step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepKey {
    pub epoch: u64,
    pub batch: u64,
}

#[derive(Debug, Clone, Copy)]
enum DropSite {
    Attention = 1,
    Block = 2,
    Classifier = 3,
}

enum AttentionLayer {
    Qia(Qia),
    Qmha(Qmha),
    Classical { multi_heads: Option<usize> },
}

enum BlockLayer {
    Qsl(Qsl),
    Ffn,
}

/// Values recorded during a forward pass, for export.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// Per sequence, L×L; multi-head models report the mean over heads.
    pub attn: Vec<Mat>,
    /// Per sequence, one L×L matrix per head.
    pub head_attn: Vec<Vec<Mat>>,
    /// Per sequence quantum features (QIA only), L×n.
    pub phi: Vec<Mat>,
    /// B×d mean-pooled encodings.
    pub pooled: Mat,
}

/// A recorded forward pass, ready for [`ForwardPass::grads`].
pub struct ForwardPass {
    pub graph: Graph,
    pub bound: BoundParams,
    pub logits: Tensor,
    pub loss: Option<Tensor>,
    pub diagnostics: Diagnostics,
}

impl ForwardPass {
    pub fn loss_value(&self) -> Option<f64> {
        self.loss.map(|l| self.graph.value(l)[[0, 0]])
    }

    pub fn logits_value(&self) -> &Mat {
        self.graph.value(self.logits)
    }

    pub fn grads(&self) -> Result<BTreeMap<String, Mat>> {
        let loss = self.loss.ok_or(QatError::Config("forward pass has no loss".into()))?;
        let mut grads = self.graph.backward(loss)?;
        Ok(self.bound.collect_grads(&self.graph, &mut grads))
    }
}

pub struct Model {
    config: ModelConfig,
    params: ModelParams,
    attention: AttentionLayer,
    block: BlockLayer,
}

impl Model {
    /// Fresh model with parameters drawn from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        let mut model = Self::skeleton(config, ParamSet::new())?;
        model.init_params();
        Ok(model)
    }

    /// Model over existing parameters (e.g. a loaded checkpoint). Every
    /// expected array must be present with the expected shape, and no extra
    /// arrays are allowed.
    pub fn from_params(config: ModelConfig, params: ModelParams) -> Result<Self> {
        let reference = Self::new(config.clone())?;
        for (name, a) in reference.params.iter() {
            let got = params.get(name)?;
            if got.dim() != a.dim() {
                return Err(QatError::Shape(format!(
                    "`{name}` is {:?}, model expects {:?}",
                    got.dim(),
                    a.dim()
                )));
            }
        }
        if let Some(extra) = params.names().find(|n| !reference.params.contains(n)) {
            return Err(QatError::Checkpoint(format!("unexpected array `{extra}`")));
        }
        Self::skeleton(config, params)
    }

    fn skeleton(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        let d = config.embed_dim;
        let n = config.n_qubits;
        let attention = match config.attention_kind {
            AttentionKind::QuantumSingle => AttentionLayer::Qia(Qia::new("qia", d, n, config.kernel_depth)?),
            AttentionKind::QuantumMulti => AttentionLayer::Qmha(Qmha::new(
                "qmha",
                d,
                config.n_heads,
                n,
                config.kernel_depth,
                config.interference_coeff,
            )?),
            AttentionKind::ClassicalSingle => AttentionLayer::Classical { multi_heads: None },
            AttentionKind::ClassicalMulti => AttentionLayer::Classical {
                multi_heads: Some(config.n_heads),
            },
        };
        let block = if config.attention_kind.is_quantum() {
            BlockLayer::Qsl(Qsl::new("qsl", d, n)?)
        } else {
            BlockLayer::Ffn
        };
        Ok(Self {
            config,
            params,
            attention,
            block,
        })
    }

    fn init_params(&mut self) {
        let c = &self.config;
        let (seed, d, hidden) = (c.seed, c.embed_dim, c.hidden());
        let p = &mut self.params;
        p.init(seed, "embed.table", c.vocab_size, d, Init::Normal { std: 0.02 });
        for ln in ["ln1", "ln2"] {
            p.init(seed, &format!("{ln}.gamma"), 1, d, Init::Ones);
            p.init(seed, &format!("{ln}.beta"), 1, d, Init::Zeros);
        }
        p.init(seed, "cls.w1", d, hidden, Init::FanIn);
        p.init(seed, "cls.b1", 1, hidden, Init::Zeros);
        p.init(seed, "cls.w2", hidden, c.n_classes, Init::FanIn);
        p.init(seed, "cls.b2", 1, c.n_classes, Init::Zeros);
        match &self.attention {
            AttentionLayer::Qia(l) => l.init(p, seed),
            AttentionLayer::Qmha(l) => l.init(p, seed),
            AttentionLayer::Classical { .. } => {
                for w in ["w_q", "w_k", "w_v", "w_o"] {
                    p.init(seed, &format!("attn.{w}"), d, d, Init::FanIn);
                }
            }
        }
        match &self.block {
            BlockLayer::Qsl(l) => l.init(p, seed),
            BlockLayer::Ffn => {
                p.init(seed, "ffn.w1", d, 2 * d, Init::FanIn);
                p.init(seed, "ffn.b1", 1, 2 * d, Init::Zeros);
                p.init(seed, "ffn.w2", 2 * d, d, Init::FanIn);
                p.init(seed, "ffn.b2", 1, d, Init::Zeros);
            }
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    pub fn count_params(&self) -> usize {
        count_params(&self.params)
    }

    /// Records the forward pass of a batch. With `labels`, also records the
    /// mean cross-entropy loss. Dropout is active only when `step` is given.
    pub fn forward(&self, ids: &[Vec<usize>], labels: Option<&[usize]>, step: Option<StepKey>) -> Result<ForwardPass> {
        if ids.is_empty() {
            return Err(QatError::Empty("batch"));
        }
        let mut g = Graph::new();
        let bound = self.params.bind(&mut g);
        let mut logits = Vec::with_capacity(ids.len());
        let mut pooled = Vec::with_capacity(ids.len());
        let mut diag = Diagnostics {
            attn: Vec::new(),
            head_attn: Vec::new(),
            phi: Vec::new(),
            pooled: Mat::zeros((0, 0)),
        };
        for (b, seq) in ids.iter().enumerate() {
            if seq.is_empty() {
                return Err(QatError::Empty("token sequence"));
            }
            let (logit, pool) = self.forward_one(&mut g, &bound, seq, b as u64, step, &mut diag)?;
            logits.push(logit);
            pooled.push(pool);
        }
        let logits = g.concat_rows(&logits)?;
        let pooled = g.concat_rows(&pooled)?;
        diag.pooled = g.value(pooled).clone();
        let loss = match labels {
            Some(labels) => Some(g.cross_entropy(logits, labels)?),
            None => None,
        };
        Ok(ForwardPass {
            graph: g,
            bound,
            logits,
            loss,
            diagnostics: diag,
        })
    }

    fn forward_one(
        &self,
        g: &mut Graph,
        p: &BoundParams,
        ids: &[usize],
        example: u64,
        step: Option<StepKey>,
        diag: &mut Diagnostics,
    ) -> Result<(Tensor, Tensor)> {
        let rate = self.config.dropout;
        let seed = self.config.seed;
        let drop = |g: &mut Graph, x: Tensor, site: DropSite| -> Result<Tensor> {
            match step {
                Some(k) => {
                    let mut rng = stream(seed, [k.epoch, k.batch, (example << 8) | site as u64]);
                    dropout(g, x, rate, true, &mut rng)
                }
                None => Ok(x),
            }
        };

        let e = g.embedding(p.get("embed.table")?, ids)?;
        let attn_out = match &self.attention {
            AttentionLayer::Qia(layer) => {
                let o = layer.forward(g, p, e)?;
                diag.attn.push(g.value(o.attn).clone());
                diag.head_attn.push(vec![g.value(o.attn).clone()]);
                diag.phi.push(g.value(o.phi).clone());
                o.y
            }
            AttentionLayer::Qmha(layer) => {
                let o = layer.forward(g, p, e)?;
                record_heads(g, &o.attn, diag);
                o.out
            }
            AttentionLayer::Classical { multi_heads } => {
                let w = AttentionWeights {
                    w_q: p.get("attn.w_q")?,
                    w_k: p.get("attn.w_k")?,
                    w_v: p.get("attn.w_v")?,
                    w_o: p.get("attn.w_o")?,
                };
                match multi_heads {
                    None => {
                        let (out, a) = classical_attention(g, e, w)?;
                        record_heads(g, &[a], diag);
                        out
                    }
                    Some(h) => {
                        let (out, heads) = classical_multihead(g, e, *h, w)?;
                        record_heads(g, &heads, diag);
                        out
                    }
                }
            }
        };
        let attn_out = drop(g, attn_out, DropSite::Attention)?;
        let r1 = g.add(e, attn_out)?;
        let h1 = g.layer_norm(r1, p.get("ln1.gamma")?, p.get("ln1.beta")?, LAYER_NORM_EPS)?;

        let block_out = match &self.block {
            BlockLayer::Qsl(layer) => layer.forward(g, p, h1)?.out,
            BlockLayer::Ffn => ffn(
                g,
                h1,
                p.get("ffn.w1")?,
                p.get("ffn.b1")?,
                p.get("ffn.w2")?,
                p.get("ffn.b2")?,
            )?,
        };
        let block_out = drop(g, block_out, DropSite::Block)?;
        let r2 = g.add(h1, block_out)?;
        let h2 = g.layer_norm(r2, p.get("ln2.gamma")?, p.get("ln2.beta")?, LAYER_NORM_EPS)?;

        let pooled = g.mean_rows(h2);
        let z = linear(g, pooled, p.get("cls.w1")?, Some(p.get("cls.b1")?))?;
        let z = g.relu(z);
        let z = drop(g, z, DropSite::Classifier)?;
        let logits = linear(g, z, p.get("cls.w2")?, Some(p.get("cls.b2")?))?;
        Ok((logits, pooled))
    }

    /// Evaluation-mode logits (B×C) and diagnostics.
    pub fn logits(&self, ids: &[Vec<usize>]) -> Result<(Mat, Diagnostics)> {
        let pass = self.forward(ids, None, None)?;
        Ok((pass.logits_value().clone(), pass.diagnostics))
    }

    /// Arg-max class of every sequence; ties go to the lowest index.
    pub fn predict(&self, ids: &[Vec<usize>]) -> Result<Vec<usize>> {
        let (logits, _) = self.logits(ids)?;
        Ok(argmax_rows(&logits))
    }
}

fn record_heads(g: &Graph, heads: &[Tensor], diag: &mut Diagnostics) {
    let mats: Vec<Mat> = heads.iter().map(|&a| g.value(a).clone()).collect();
    let mut mean = mats[0].clone();
    for m in &mats[1..] {
        mean += m;
    }
    mean /= mats.len() as f64;
    diag.attn.push(mean);
    diag.head_attn.push(mats);
}

pub fn argmax_rows(m: &Mat) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (i, &v)| if v > best.1 { (i, v) } else { best },
                )
                .0
        })
        .collect()
}

/// Total number of trainable scalars.
pub fn count_params(params: &ModelParams) -> usize {
    params.count()
}
