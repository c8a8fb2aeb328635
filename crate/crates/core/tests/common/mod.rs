//! Independent reference implementations used by the integration tests.
//!
//! The dense simulator builds every gate as an explicit 2^n×2^n matrix from
//! Kronecker products and multiplies it into the state; nothing here calls the
//! library's simulator. The layer and model oracles are plain nested loops
//! over `Vec<Vec<f64>>`.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use qat_core::nn::{Mat, ParamSet};
use qat_core::statevector::{Angle, Circuit, Gate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type V = Vec<f64>;
pub type M = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(r: &mut impl Rng, n: usize, lo: f64, hi: f64) -> V {
    (0..n).map(|_| r.random_range(lo..hi)).collect()
}

pub fn rand_m(r: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> M {
    (0..rows).map(|_| rand_vec(r, cols, -scale, scale)).collect()
}

pub fn to_mat(m: &M) -> Mat {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    Mat::from_shape_fn((rows, cols), |(i, j)| m[i][j])
}

pub fn from_mat(m: &Mat) -> M {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn max_abs_diff(a: &M, b: &M) -> f64 {
    assert_eq!(a.len(), b.len(), "row count");
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len(), "column count");
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Dense statevector oracle

#[derive(Debug, Clone, Copy)]
pub enum G {
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot(usize, usize),
    Cz(usize, usize),
}

type U2 = [[C; 2]; 2];

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

const I2: U2 = [
    [C::new(1.0, 0.0), C::new(0.0, 0.0)],
    [C::new(0.0, 0.0), C::new(1.0, 0.0)],
];
const X2: U2 = [
    [C::new(0.0, 0.0), C::new(1.0, 0.0)],
    [C::new(1.0, 0.0), C::new(0.0, 0.0)],
];
const Z2: U2 = [
    [C::new(1.0, 0.0), C::new(0.0, 0.0)],
    [C::new(0.0, 0.0), C::new(-1.0, 0.0)],
];
const P0: U2 = [
    [C::new(1.0, 0.0), C::new(0.0, 0.0)],
    [C::new(0.0, 0.0), C::new(0.0, 0.0)],
];
const P1: U2 = [
    [C::new(0.0, 0.0), C::new(0.0, 0.0)],
    [C::new(0.0, 0.0), C::new(1.0, 0.0)],
];

fn u2(g: G) -> U2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match g {
        G::H(_) => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        G::Rx(_, t) => {
            let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
            [[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]]
        }
        G::Ry(_, t) => {
            let (co, si) = ((t / 2.0).cos(), (t / 2.0).sin());
            [[c(co, 0.0), c(-si, 0.0)], [c(si, 0.0), c(co, 0.0)]]
        }
        G::Rz(_, t) => [
            [C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)],
            [c(0.0, 0.0), C::from_polar(1.0, t / 2.0)],
        ],
        _ => unreachable!("two-qubit gate"),
    }
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone)]
pub struct Dense {
    pub dim: usize,
    pub a: Vec<C>,
}

impl Dense {
    pub fn identity(dim: usize) -> Self {
        let mut a = vec![c(0.0, 0.0); dim * dim];
        for i in 0..dim {
            a[i * dim + i] = c(1.0, 0.0);
        }
        Self { dim, a }
    }

    fn from_u2(u: &U2) -> Self {
        Self {
            dim: 2,
            a: vec![u[0][0], u[0][1], u[1][0], u[1][1]],
        }
    }

    pub fn kron(&self, o: &Dense) -> Dense {
        let dim = self.dim * o.dim;
        let mut a = vec![c(0.0, 0.0); dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..o.dim {
                    for l in 0..o.dim {
                        a[(i * o.dim + k) * dim + j * o.dim + l] = self.a[i * self.dim + j] * o.a[k * o.dim + l];
                    }
                }
            }
        }
        Dense { dim, a }
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        let n = self.dim;
        let mut a = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                for j in 0..n {
                    a[i * n + j] += s * o.a[k * n + j];
                }
            }
        }
        Dense { dim: n, a }
    }

    pub fn add(&self, o: &Dense) -> Dense {
        Dense {
            dim: self.dim,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.a[i * self.dim + j] * v[j]).sum())
            .collect()
    }

    pub fn dagger(&self) -> Dense {
        let n = self.dim;
        let mut a = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                a[j * n + i] = self.a[i * n + j].conj();
            }
        }
        Dense { dim: n, a }
    }
}

/// `ops[0] ⊗ ops[1] ⊗ … ⊗ ops[n-1]`; wire 0 is the most significant factor.
fn tensor_of(ops: &[U2]) -> Dense {
    ops.iter()
        .skip(1)
        .fold(Dense::from_u2(&ops[0]), |acc, u| acc.kron(&Dense::from_u2(u)))
}

fn embed(n: usize, wire: usize, u: U2) -> Dense {
    let mut ops = vec![I2; n];
    ops[wire] = u;
    tensor_of(&ops)
}

fn controlled(n: usize, control: usize, target: usize, u: U2) -> Dense {
    let mut off = vec![I2; n];
    off[control] = P0;
    let mut on = vec![I2; n];
    on[control] = P1;
    on[target] = u;
    tensor_of(&off).add(&tensor_of(&on))
}

pub fn gate_matrix(n: usize, g: G) -> Dense {
    match g {
        G::H(w) | G::Rx(w, _) | G::Ry(w, _) | G::Rz(w, _) => embed(n, w, u2(g)),
        G::Cnot(ctl, t) => controlled(n, ctl, t, X2),
        G::Cz(a, b) => controlled(n, a, b, Z2),
    }
}

pub fn unitary(n: usize, gates: &[G]) -> Dense {
    gates
        .iter()
        .fold(Dense::identity(1 << n), |u, &g| gate_matrix(n, g).mul(&u))
}

pub fn zero_state(n: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

pub fn dense_state(n: usize, gates: &[G]) -> Vec<C> {
    gates.iter().fold(zero_state(n), |s, &g| gate_matrix(n, g).apply(&s))
}

fn expect_op(n: usize, state: &[C], wire: usize, op: U2) -> f64 {
    let m = embed(n, wire, op);
    let ms = m.apply(state);
    state.iter().zip(&ms).map(|(a, b)| (a.conj() * b).re).sum()
}

pub fn expect_z(n: usize, state: &[C], wire: usize) -> f64 {
    expect_op(n, state, wire, Z2)
}

pub fn expect_x(n: usize, state: &[C], wire: usize) -> f64 {
    expect_op(n, state, wire, X2)
}

fn resolve(a: &Angle, params: &[f64], features: &[f64]) -> f64 {
    match *a {
        Angle::Fixed(v) => v,
        Angle::Param { slot, scale } => scale * params[slot],
        Angle::Feature { index, scale } => scale * features[index],
        Angle::FeatureSquared { index } => features[index] * features[index],
        Angle::ParamFeature { slot, index, scale } => scale * params[slot] * features[index],
    }
}

/// Concrete gate list of a library circuit.
pub fn lower(circuit: &Circuit, params: &[f64], features: &[f64]) -> Vec<G> {
    circuit
        .gates()
        .iter()
        .map(|g| match g {
            Gate::H(w) => G::H(*w),
            Gate::Rx(w, a) => G::Rx(*w, resolve(a, params, features)),
            Gate::Ry(w, a) => G::Ry(*w, resolve(a, params, features)),
            Gate::Rz(w, a) => G::Rz(*w, resolve(a, params, features)),
            Gate::Cnot { control, target } => G::Cnot(*control, *target),
            Gate::Cz(a, b) => G::Cz(*a, *b),
        })
        .collect()
}

fn cnot_chain(n: usize, out: &mut Vec<G>) {
    for i in 0..n.saturating_sub(1) {
        out.push(G::Cnot(i, i + 1));
    }
}

/// Kernel encoding written out from its definition.
pub fn kernel_gates(x: &[f64], theta0: &[f64], theta1: &[f64], depth: usize) -> Vec<G> {
    let n = theta0.len();
    let d = x.len();
    let mut gates = Vec::new();
    for i in 0..n {
        let xi = x[i % d];
        gates.push(G::Rx(i, theta0[i] * xi));
        gates.push(G::Rz(i, xi * xi));
    }
    for _ in 0..depth {
        cnot_chain(n, &mut gates);
        for i in 0..n {
            gates.push(G::Ry(i, theta1[i] * x[i % d]));
        }
        cnot_chain(n, &mut gates);
    }
    gates
}

pub fn oracle_features(x: &[f64], theta0: &[f64], theta1: &[f64], depth: usize) -> V {
    let n = theta0.len();
    let s = dense_state(n, &kernel_gates(x, theta0, theta1, depth));
    (0..n).map(|w| expect_z(n, &s, w)).collect()
}

pub fn oracle_superposition(z: &[f64], theta: &[f64], phi: &[f64]) -> V {
    let n = z.len();
    let mut gates: Vec<G> = (0..n).map(G::H).collect();
    gates.extend((0..n).map(|j| G::Ry(j, theta[j] * z[j])));
    gates.extend((0..n).map(|j| G::Rz(j, phi[j] * z[j])));
    cnot_chain(n, &mut gates);
    let s = dense_state(n, &gates);
    (0..n).map(|w| expect_x(n, &s, w)).collect()
}

// ---------------------------------------------------------------------------
// Loop-level linear algebra

pub fn matmul(a: &M, b: &M) -> M {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        assert_eq!(a[i].len(), k);
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &M) -> M {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn softmax(row: &[f64]) -> V {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: V = row.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn layer_norm(row: &[f64], gamma: &[f64], beta: &[f64], eps: f64) -> V {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    row.iter()
        .enumerate()
        .map(|(j, v)| (v - mean) / (var + eps).sqrt() * gamma[j] + beta[j])
        .collect()
}

pub fn add(a: &M, b: &M) -> M {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

fn cols(a: &M, start: usize, len: usize) -> M {
    a.iter().map(|r| r[start..start + len].to_vec()).collect()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

// ---------------------------------------------------------------------------
// Layer oracles

/// Interference attention on one sequence: `(y, attention, features)`.
pub fn qia_oracle(x: &M, w_red: &M, theta0: &[f64], theta1: &[f64], phase: f64, depth: usize) -> (M, M, M) {
    let z = matmul(x, w_red);
    let phi: M = z.iter().map(|zi| oracle_features(zi, theta0, theta1, depth)).collect();
    let l = x.len();
    let mut attn = vec![vec![0.0; l]; l];
    for i in 0..l {
        let logits: V = (0..l)
            .map(|j| dot(&phi[i], &phi[j]) + 2.0 * norm(&phi[i]) * norm(&phi[j]) * phase.cos())
            .collect();
        attn[i] = softmax(&logits);
    }
    (matmul(&attn, x), attn, phi)
}

pub struct HeadOracle {
    pub r: M,
    pub theta0: V,
    pub theta1: V,
    pub phase: f64,
}

/// Quantum multi-head attention on one sequence: `(out, per-head attention)`.
#[allow(clippy::too_many_arguments)]
pub fn qmha_oracle(
    x: &M,
    wq: &M,
    wk: &M,
    wv: &M,
    wo: &M,
    heads: &[HeadOracle],
    coeff: f64,
    depth: usize,
) -> (M, Vec<M>) {
    let d = wq[0].len();
    let dh = d / heads.len();
    let (q, k, v) = (matmul(x, wq), matmul(x, wk), matmul(x, wv));
    let l = x.len();
    let mut cat = vec![Vec::new(); l];
    let mut attns = Vec::new();
    for (h, head) in heads.iter().enumerate() {
        let qr = matmul(&cols(&q, h * dh, dh), &head.r);
        let kr = matmul(&cols(&k, h * dh, dh), &head.r);
        let fq: M = qr
            .iter()
            .map(|r| oracle_features(r, &head.theta0, &head.theta1, depth))
            .collect();
        let fk: M = kr
            .iter()
            .map(|r| oracle_features(r, &head.theta0, &head.theta1, depth))
            .collect();
        let mut a = vec![vec![0.0; l]; l];
        for i in 0..l {
            let s: V = (0..l)
                .map(|j| {
                    (dot(&fq[i], &fk[j]) + coeff * norm(&fq[i]) * norm(&fk[j]) * head.phase.cos()) / (dh as f64).sqrt()
                })
                .collect();
            a[i] = softmax(&s);
        }
        let o = matmul(&a, &cols(&v, h * dh, dh));
        for i in 0..l {
            cat[i].extend_from_slice(&o[i]);
        }
        attns.push(a);
    }
    (matmul(&cat, wo), attns)
}

/// Superposition layer on one sequence: `(out, features)`.
pub fn qsl_oracle(h: &M, w_red: &M, theta: &[f64], phi: &[f64], w_exp: &M) -> (M, M) {
    let z = matmul(h, w_red);
    let s: M = z.iter().map(|zi| oracle_superposition(zi, theta, phi)).collect();
    (add(&matmul(&s, w_exp), h), s)
}

/// Scaled dot-product attention with `n_heads` column blocks.
pub fn classical_oracle(x: &M, wq: &M, wk: &M, wv: &M, wo: &M, n_heads: usize) -> (M, Vec<M>) {
    let d = wq[0].len();
    let dh = d / n_heads;
    let (q, k, v) = (matmul(x, wq), matmul(x, wk), matmul(x, wv));
    let l = x.len();
    let mut cat = vec![Vec::new(); l];
    let mut attns = Vec::new();
    for h in 0..n_heads {
        let (qh, kh, vh) = (cols(&q, h * dh, dh), cols(&k, h * dh, dh), cols(&v, h * dh, dh));
        let a: M = (0..l)
            .map(|i| softmax(&(0..l).map(|j| dot(&qh[i], &kh[j]) / (dh as f64).sqrt()).collect::<V>()))
            .collect();
        let o = matmul(&a, &vh);
        for i in 0..l {
            cat[i].extend_from_slice(&o[i]);
        }
        attns.push(a);
    }
    (matmul(&cat, wo), attns)
}

fn linear(x: &M, w: &M, b: &[f64]) -> M {
    matmul(x, w)
        .into_iter()
        .map(|r| r.iter().zip(b).map(|(v, bb)| v + bb).collect())
        .collect()
}

fn relu(x: &M) -> M {
    x.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect()
}

pub fn ffn_oracle(x: &M, w1: &M, b1: &[f64], w2: &M, b2: &[f64]) -> M {
    linear(&relu(&linear(x, w1, b1)), w2, b2)
}

// ---------------------------------------------------------------------------
// Whole-model oracle

fn p(params: &ParamSet, name: &str) -> M {
    from_mat(params.get(name).unwrap_or_else(|_| panic!("missing `{name}`")))
}

fn prow(params: &ParamSet, name: &str) -> V {
    p(params, name).remove(0)
}

/// Evaluation-mode logits of one sequence, computed by hand from the
/// parameter arrays. `kind` is the attention-kind string.
pub fn model_oracle(
    params: &ParamSet,
    kind: &str,
    n_heads: usize,
    coeff: Option<f64>,
    depth: usize,
    ids: &[usize],
) -> V {
    let table = p(params, "embed.table");
    let e: M = ids.iter().map(|&i| table[i].clone()).collect();
    let attn_out = match kind {
        "quantum_single" => {
            qia_oracle(
                &e,
                &p(params, "qia.w_red"),
                &prow(params, "qia.theta0"),
                &prow(params, "qia.theta1"),
                prow(params, "qia.phase")[0],
                depth,
            )
            .0
        }
        "quantum_multi" => {
            let heads: Vec<HeadOracle> = (0..n_heads)
                .map(|h| HeadOracle {
                    r: p(params, &format!("qmha.head{h}.r")),
                    theta0: prow(params, &format!("qmha.head{h}.theta0")),
                    theta1: prow(params, &format!("qmha.head{h}.theta1")),
                    phase: prow(params, &format!("qmha.head{h}.phase"))[0],
                })
                .collect();
            qmha_oracle(
                &e,
                &p(params, "qmha.w_q"),
                &p(params, "qmha.w_k"),
                &p(params, "qmha.w_v"),
                &p(params, "qmha.w_o"),
                &heads,
                coeff.unwrap_or(n_heads as f64),
                depth,
            )
            .0
        }
        "classical_single" | "classical_multi" => {
            let h = if kind == "classical_single" { 1 } else { n_heads };
            classical_oracle(
                &e,
                &p(params, "attn.w_q"),
                &p(params, "attn.w_k"),
                &p(params, "attn.w_v"),
                &p(params, "attn.w_o"),
                h,
            )
            .0
        }
        other => panic!("unknown kind {other}"),
    };
    let eps = 1e-5;
    let ln = |x: &M, which: &str| -> M {
        let (g, b) = (
            prow(params, &format!("{which}.gamma")),
            prow(params, &format!("{which}.beta")),
        );
        x.iter().map(|r| layer_norm(r, &g, &b, eps)).collect()
    };
    let h1 = ln(&add(&e, &attn_out), "ln1");
    let block = if kind.starts_with("quantum") {
        qsl_oracle(
            &h1,
            &p(params, "qsl.w_red"),
            &prow(params, "qsl.theta"),
            &prow(params, "qsl.phi"),
            &p(params, "qsl.w_exp"),
        )
        .0
    } else {
        ffn_oracle(
            &h1,
            &p(params, "ffn.w1"),
            &prow(params, "ffn.b1"),
            &p(params, "ffn.w2"),
            &prow(params, "ffn.b2"),
        )
    };
    let h2 = ln(&add(&h1, &block), "ln2");
    let d = h2[0].len();
    let pooled: V = (0..d)
        .map(|j| h2.iter().map(|r| r[j]).sum::<f64>() / h2.len() as f64)
        .collect();
    let z = relu(&linear(&vec![pooled], &p(params, "cls.w1"), &prow(params, "cls.b1")));
    linear(&z, &p(params, "cls.w2"), &prow(params, "cls.b2")).remove(0)
}

/// Mean cross-entropy from logits rows.
pub fn cross_entropy(logits: &M, labels: &[usize]) -> f64 {
    logits
        .iter()
        .zip(labels)
        .map(|(row, &y)| {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - row[y]
        })
        .sum::<f64>()
        / labels.len() as f64
}

// ---------------------------------------------------------------------------
// Finite differences

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_diff(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// `|a - b| <= rel · max(|a|, |b|) + abs`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + abs
}

// ---------------------------------------------------------------------------
// Toy data

/// Two-class marker task: every text holds filler words plus one class
/// marker ("good" for 1, "bad" for 0) at a random position.
pub fn marker_task(n: usize, len: usize, seed: u64) -> String {
    let mut r = rng(seed);
    let filler: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let mut out = String::new();
    for _ in 0..n {
        let y: usize = r.random_range(0..2);
        let mut words: Vec<&str> = (0..len - 1)
            .map(|_| filler[r.random_range(0..filler.len())].as_str())
            .collect();
        words.insert(r.random_range(0..len), if y == 1 { "good" } else { "bad" });
        out.push_str(&format!("{y}\t{}\n", words.join(" ")));
    }
    out
}
