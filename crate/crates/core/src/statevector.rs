//! Dense statevector simulation of small parameterized circuits.
//!
//! Basis index `i` encodes `|i⟩` with qubit 0 as the most significant bit, so
//! on a 3-qubit register index 4 (`0b100`) is the state with only wire 0 set.
//! Every circuit starts from `|0…0⟩` and applies its gates in list order.
//!
//! Rotation angles are symbolic ([`Angle`]): they may reference a trainable
//! parameter slot, an input feature, or a product of both. That lets one
//! circuit template serve every token of a batch, and lets
//! [`Circuit::gradients`] return exact derivatives of Pauli expectations with
//! respect to parameters *and* input features from the parameter-shift rule.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;

use crate::error::{QatError, Result};

/// Largest register this simulator accepts.
pub const MAX_QUBITS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` wires.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes. The length must be `2^n` for `1 ≤ n ≤ 8`;
    /// normalization is the caller's business.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(QatError::Shape(format!(
                "amplitude vector length {len} is not 2^n with n >= 1"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.n_qubits {
            return Err(QatError::WireOutOfRange {
                wire,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    fn apply_1q(&mut self, wire: usize, m: [[Complex64; 2]; 2]) {
        let mask = self.mask(wire);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_kind(&mut self, kind: GateKind, wires: (usize, usize), angle: f64) {
        let half = 0.5 * angle;
        let (c, s) = (half.cos(), half.sin());
        let re = |x: f64| Complex64::new(x, 0.0);
        match kind {
            GateKind::H => {
                let h = re(FRAC_1_SQRT_2);
                self.apply_1q(wires.0, [[h, h], [h, -h]]);
            }
            GateKind::Rx => {
                let ms = Complex64::new(0.0, -s);
                self.apply_1q(wires.0, [[re(c), ms], [ms, re(c)]]);
            }
            GateKind::Ry => self.apply_1q(wires.0, [[re(c), re(-s)], [re(s), re(c)]]),
            GateKind::Rz => {
                let zero = re(0.0);
                self.apply_1q(wires.0, [[Complex64::new(c, -s), zero], [zero, Complex64::new(c, s)]]);
            }
            GateKind::Cnot => {
                let (cm, tm) = (self.mask(wires.0), self.mask(wires.1));
                for i in 0..self.amplitudes.len() {
                    if i & cm != 0 && i & tm == 0 {
                        self.amplitudes.swap(i, i | tm);
                    }
                }
            }
            GateKind::Cz => {
                let both = self.mask(wires.0) | self.mask(wires.1);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & both == both {
                        *a = -*a;
                    }
                }
            }
        }
    }

    /// Applies one gate, resolving its angle from `params` and `features`.
    pub fn apply_gate(&mut self, gate: &Gate, params: &[f64], features: &[f64]) -> Result<()> {
        for w in gate.wires() {
            self.check_wire(w)?;
        }
        let angle = match gate.angle() {
            Some(a) => a.resolve(params, features)?,
            None => 0.0,
        };
        self.apply_kind(gate.kind(), gate.wire_pair(), angle);
        Ok(())
    }

    /// `⟨ψ|P_wire|ψ⟩` for `P ∈ {X, Z}`.
    pub fn expect_pauli(&self, pauli: Pauli, wire: usize) -> Result<f64> {
        self.check_wire(wire)?;
        Ok(self.expect_unchecked(pauli, wire))
    }

    /// Expectations of `pauli` on every wire, in wire order.
    pub fn expect_all(&self, pauli: Pauli) -> Vec<f64> {
        (0..self.n_qubits).map(|w| self.expect_unchecked(pauli, w)).collect()
    }

    fn expect_unchecked(&self, pauli: Pauli, wire: usize) -> f64 {
        let mask = self.mask(wire);
        let amps = &self.amplitudes;
        let v: f64 = match pauli {
            Pauli::Z => amps
                .iter()
                .enumerate()
                .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                .sum(),
            Pauli::X => (0..amps.len())
                .filter(|i| i & mask == 0)
                .map(|i| 2.0 * (amps[i].conj() * amps[i | mask]).re)
                .sum(),
        };
        v.clamp(-1.0, 1.0)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(QatError::QubitCount(n));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Z,
}

/// Symbolic rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    /// `scale · params[slot]`
    Param {
        slot: usize,
        scale: f64,
    },
    /// `scale · features[index]`
    Feature {
        index: usize,
        scale: f64,
    },
    /// `features[index]²`
    FeatureSquared {
        index: usize,
    },
    /// `scale · params[slot] · features[index]`
    ParamFeature {
        slot: usize,
        index: usize,
        scale: f64,
    },
}

impl Angle {
    pub fn param(slot: usize) -> Self {
        Angle::Param { slot, scale: 1.0 }
    }

    pub fn resolve(&self, params: &[f64], features: &[f64]) -> Result<f64> {
        let p = |slot: usize| {
            params.get(slot).copied().ok_or(QatError::MissingParameter {
                slot,
                available: params.len(),
            })
        };
        let x = |index: usize| {
            features.get(index).copied().ok_or(QatError::MissingFeature {
                index,
                available: features.len(),
            })
        };
        Ok(match *self {
            Angle::Fixed(a) => a,
            Angle::Param { slot, scale } => scale * p(slot)?,
            Angle::Feature { index, scale } => scale * x(index)?,
            Angle::FeatureSquared { index } => {
                let v = x(index)?;
                v * v
            }
            Angle::ParamFeature { slot, index, scale } => scale * p(slot)? * x(index)?,
        })
    }

    fn slot(&self) -> Option<usize> {
        match *self {
            Angle::Param { slot, .. } | Angle::ParamFeature { slot, .. } => Some(slot),
            _ => None,
        }
    }

    /// `∂angle/∂param` as `(slot, value)`, if the angle depends on a parameter.
    fn param_partial(&self, features: &[f64]) -> Option<(usize, f64)> {
        match *self {
            Angle::Param { slot, scale } => Some((slot, scale)),
            Angle::ParamFeature { slot, index, scale } => Some((slot, scale * features[index])),
            _ => None,
        }
    }

    /// `∂angle/∂feature` as `(index, value)`, if the angle depends on a feature.
    fn feature_partial(&self, params: &[f64], features: &[f64]) -> Option<(usize, f64)> {
        match *self {
            Angle::Feature { index, scale } => Some((index, scale)),
            Angle::FeatureSquared { index } => Some((index, 2.0 * features[index])),
            Angle::ParamFeature { slot, index, scale } => Some((index, scale * params[slot])),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    H,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    Rx(usize, Angle),
    Ry(usize, Angle),
    Rz(usize, Angle),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::H(_) => GateKind::H,
            Gate::Rx(..) => GateKind::Rx,
            Gate::Ry(..) => GateKind::Ry,
            Gate::Rz(..) => GateKind::Rz,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Cz(..) => GateKind::Cz,
        }
    }

    pub fn wires(&self) -> Vec<usize> {
        match *self {
            Gate::H(w) | Gate::Rx(w, _) | Gate::Ry(w, _) | Gate::Rz(w, _) => vec![w],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Cz(a, b) => vec![a, b],
        }
    }

    fn wire_pair(&self) -> (usize, usize) {
        match *self {
            Gate::H(w) | Gate::Rx(w, _) | Gate::Ry(w, _) | Gate::Rz(w, _) => (w, w),
            Gate::Cnot { control, target } => (control, target),
            Gate::Cz(a, b) => (a, b),
        }
    }

    pub fn angle(&self) -> Option<&Angle> {
        match self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => Some(a),
            _ => None,
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.angle().is_some()
    }
}

/// Ordered gate list over `n_qubits` wires with `n_params` trainable slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_params: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self {
            n_qubits,
            n_params,
            gates: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Appends `gate`, validating its wires and parameter slot.
    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        let wires = gate.wires();
        for &w in &wires {
            if w >= self.n_qubits {
                return Err(QatError::WireOutOfRange {
                    wire: w,
                    n_qubits: self.n_qubits,
                });
            }
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(QatError::DuplicateWire(wires[0]));
        }
        if let Some(slot) = gate.angle().and_then(Angle::slot) {
            if slot >= self.n_params {
                return Err(QatError::MissingParameter {
                    slot,
                    available: self.n_params,
                });
            }
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// CNOT `i → i+1` for every neighbouring pair.
    pub fn push_cnot_chain(&mut self) -> Result<&mut Self> {
        for i in 0..self.n_qubits.saturating_sub(1) {
            self.push(Gate::Cnot {
                control: i,
                target: i + 1,
            })?;
        }
        Ok(self)
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(QatError::ParamCount {
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Runs the circuit from `|0…0⟩`.
    pub fn run(&self, params: &[f64], features: &[f64]) -> Result<StateVector> {
        self.check_params(params)?;
        let mut state = StateVector::zero(self.n_qubits)?;
        for gate in &self.gates {
            state.apply_gate(gate, params, features)?;
        }
        Ok(state)
    }

    /// Pauli expectations on every wire after running the circuit.
    pub fn expectations(&self, params: &[f64], features: &[f64], pauli: Pauli) -> Result<Vec<f64>> {
        Ok(self.run(params, features)?.expect_all(pauli))
    }

    /// Derivative of every wire's expectation with respect to every rotation
    /// angle, by the two-term shift rule. Row `r` of the result belongs to the
    /// `r`-th rotation gate (with its gate index); each row holds one value
    /// per wire.
    pub fn angle_jacobian(&self, params: &[f64], features: &[f64], pauli: Pauli) -> Result<Vec<(usize, Vec<f64>)>> {
        self.check_params(params)?;
        let mut prefix = StateVector::zero(self.n_qubits)?;
        let mut rows = Vec::new();
        for (k, gate) in self.gates.iter().enumerate() {
            if let Some(angle) = gate.angle() {
                let theta = angle.resolve(params, features)?;
                let shifted = |delta: f64| -> Result<Vec<f64>> {
                    let mut s = prefix.clone();
                    s.apply_kind(gate.kind(), gate.wire_pair(), theta + delta);
                    for g in &self.gates[k + 1..] {
                        s.apply_gate(g, params, features)?;
                    }
                    Ok(s.expect_all(pauli))
                };
                let plus = shifted(FRAC_PI_2)?;
                let minus = shifted(-FRAC_PI_2)?;
                let row = plus.iter().zip(&minus).map(|(p, m)| 0.5 * (p - m)).collect();
                rows.push((k, row));
            }
            prefix.apply_gate(gate, params, features)?;
        }
        Ok(rows)
    }

    /// Full Jacobian of the wire expectations with respect to parameters and
    /// input features. Contributions of gates sharing a slot or feature are
    /// summed.
    pub fn gradients(&self, params: &[f64], features: &[f64], pauli: Pauli) -> Result<CircuitGradients> {
        let rows = self.angle_jacobian(params, features, pauli)?;
        let n = self.n_qubits;
        let mut d_params = vec![vec![0.0; self.n_params]; n];
        let mut d_features = vec![vec![0.0; features.len()]; n];
        for (k, row) in rows {
            let angle = self.gates[k].angle().expect("rotation row");
            if let Some((slot, dp)) = angle.param_partial(features) {
                for w in 0..n {
                    d_params[w][slot] += dp * row[w];
                }
            }
            if let Some((idx, dx)) = angle.feature_partial(params, features) {
                for w in 0..n {
                    d_features[w][idx] += dx * row[w];
                }
            }
        }
        Ok(CircuitGradients { d_params, d_features })
    }
}

/// `d_params[wire][slot]` and `d_features[wire][index]` of `⟨P_wire⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGradients {
    pub d_params: Vec<Vec<f64>>,
    pub d_features: Vec<Vec<f64>>,
}

/// Applies a single gate to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate, params: &[f64]) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_gate(gate, params, &[])?;
    Ok(out)
}

/// Runs `circuit` from `|0…0⟩`.
pub fn run_circuit(circuit: &Circuit, params: &[f64], input_features: &[f64]) -> Result<StateVector> {
    circuit.run(params, input_features)
}

/// `∂⟨P_wire⟩/∂params` via the parameter-shift rule.
pub fn param_shift_grad(
    circuit: &Circuit,
    params: &[f64],
    input_features: &[f64],
    pauli: Pauli,
    wire: usize,
) -> Result<Vec<f64>> {
    if wire >= circuit.n_qubits() {
        return Err(QatError::WireOutOfRange {
            wire,
            n_qubits: circuit.n_qubits(),
        });
    }
    let mut g = circuit.gradients(params, input_features, pauli)?;
    Ok(g.d_params.swap_remove(wire))
}

/// `(|0…0⟩ + |1…1⟩)/√2` built directly from its two amplitudes.
pub fn ghz_state(n: usize) -> Result<StateVector> {
    let mut s = StateVector::zero(n)?;
    let last = s.amplitudes.len() - 1;
    s.amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    s.amplitudes[last] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(s)
}

/// Hadamard on wire 0 followed by a CNOT chain; prepares the GHZ state.
pub fn ghz_circuit(n: usize) -> Result<Circuit> {
    let mut c = Circuit::new(n, 0)?;
    c.push(Gate::H(0))?;
    c.push_cnot_chain()?;
    Ok(c)
}
