//! Python bindings: `import qat`.

use std::path::PathBuf;

use ndarray::Array2;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qat_core::attention::{qia_forward, QiaParams};
use qat_core::harness::{self, TrainConfig, Trained};
use qat_core::qkernel::{self, KernelParams};
use qat_core::statevector::{self, Angle, Gate, Pauli};

type Rows = Vec<Vec<f64>>;
use qat_core::QatError;

fn py_err(e: QatError) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_mat(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn from_mat(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn pauli(name: &str) -> PyResult<Pauli> {
    match name {
        "X" | "x" => Ok(Pauli::X),
        "Z" | "z" => Ok(Pauli::Z),
        _ => Err(PyValueError::new_err(format!(
            "unknown Pauli `{name}`, expected X or Z"
        ))),
    }
}

/// Amplitudes of the n-qubit GHZ state.
#[pyfunction]
fn ghz_state(n: usize) -> PyResult<Vec<Complex64>> {
    Ok(statevector::ghz_state(n).map_err(py_err)?.amplitudes().to_vec())
}

/// Gate list over `n_qubits` wires with `n_params` trainable slots.
#[pyclass(name = "Circuit")]
struct PyCircuit {
    inner: statevector::Circuit,
}

impl PyCircuit {
    fn push(&mut self, gate: Gate) -> PyResult<()> {
        self.inner.push(gate).map_err(py_err)?;
        Ok(())
    }
}

fn angle(value: Option<f64>, slot: Option<usize>) -> PyResult<Angle> {
    match (value, slot) {
        (Some(v), None) => Ok(Angle::Fixed(v)),
        (None, Some(s)) => Ok(Angle::param(s)),
        _ => Err(PyValueError::new_err("give exactly one of `angle` or `slot`")),
    }
}

#[pymethods]
impl PyCircuit {
    #[new]
    #[pyo3(signature = (n_qubits, n_params=0))]
    fn new(n_qubits: usize, n_params: usize) -> PyResult<Self> {
        Ok(Self {
            inner: statevector::Circuit::new(n_qubits, n_params).map_err(py_err)?,
        })
    }

    fn h(&mut self, wire: usize) -> PyResult<()> {
        self.push(Gate::H(wire))
    }

    #[pyo3(signature = (wire, angle=None, slot=None))]
    fn rx(&mut self, wire: usize, angle: Option<f64>, slot: Option<usize>) -> PyResult<()> {
        let a = self::angle(angle, slot)?;
        self.push(Gate::Rx(wire, a))
    }

    #[pyo3(signature = (wire, angle=None, slot=None))]
    fn ry(&mut self, wire: usize, angle: Option<f64>, slot: Option<usize>) -> PyResult<()> {
        let a = self::angle(angle, slot)?;
        self.push(Gate::Ry(wire, a))
    }

    #[pyo3(signature = (wire, angle=None, slot=None))]
    fn rz(&mut self, wire: usize, angle: Option<f64>, slot: Option<usize>) -> PyResult<()> {
        let a = self::angle(angle, slot)?;
        self.push(Gate::Rz(wire, a))
    }

    fn cnot(&mut self, control: usize, target: usize) -> PyResult<()> {
        self.push(Gate::Cnot { control, target })
    }

    fn cz(&mut self, a: usize, b: usize) -> PyResult<()> {
        self.push(Gate::Cz(a, b))
    }

    fn __len__(&self) -> usize {
        self.inner.gates().len()
    }

    #[pyo3(signature = (params=Vec::new()))]
    fn run(&self, params: Vec<f64>) -> PyResult<Vec<Complex64>> {
        Ok(self.inner.run(&params, &[]).map_err(py_err)?.amplitudes().to_vec())
    }

    /// Per-wire expectation of `pauli` ("X" or "Z").
    #[pyo3(signature = (params=Vec::new(), pauli="Z"))]
    fn expectations(&self, params: Vec<f64>, pauli: &str) -> PyResult<Vec<f64>> {
        self.inner
            .expectations(&params, &[], self::pauli(pauli)?)
            .map_err(py_err)
    }

    /// `grad[wire][slot]` of the per-wire expectations by the shift rule.
    #[pyo3(signature = (params, pauli="Z"))]
    fn gradients(&self, params: Vec<f64>, pauli: &str) -> PyResult<Vec<Vec<f64>>> {
        Ok(self
            .inner
            .gradients(&params, &[], self::pauli(pauli)?)
            .map_err(py_err)?
            .d_params)
    }
}

/// Quantum kernel with per-wire angles `theta0`, `theta1`.
#[pyclass(name = "Kernel")]
struct PyKernel {
    inner: KernelParams,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (theta0, theta1, depth=1))]
    fn new(theta0: Vec<f64>, theta1: Vec<f64>, depth: usize) -> PyResult<Self> {
        Ok(Self {
            inner: KernelParams::new(theta0, theta1).map_err(py_err)?.with_depth(depth),
        })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn feature_map(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(qkernel::feature_map(&x, &self.inner).map_err(py_err)?.0)
    }

    fn __call__(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        qkernel::kernel(&x, &y, &self.inner).map_err(py_err)
    }

    /// `dK/d[theta0, theta1]`.
    fn param_grad(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
        qkernel::kernel_param_grad(&x, &y, &self.inner).map_err(py_err)
    }

    fn gram(&self, xs: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        qkernel::gram_matrix(&xs, &self.inner).map_err(py_err)
    }
}

/// Interference attention on one L×d sequence; returns `(y, attention)`.
#[pyfunction]
#[pyo3(signature = (x, w_red, theta0, theta1, phase, depth=1))]
fn interference_attention(
    x: Vec<Vec<f64>>,
    w_red: Vec<Vec<f64>>,
    theta0: Vec<f64>,
    theta1: Vec<f64>,
    phase: f64,
    depth: usize,
) -> PyResult<(Rows, Rows)> {
    let p = QiaParams {
        w_red: to_mat(w_red)?,
        kernel: KernelParams::new(theta0, theta1).map_err(py_err)?.with_depth(depth),
        phase,
    };
    let out = qia_forward(&[to_mat(x)?], &p).map_err(py_err)?;
    Ok((from_mat(&out.y[0]), from_mat(&out.attn[0])))
}

fn report_dict<'py>(py: Python<'py>, r: &harness::EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("macro_f1", r.macro_f1)?;
    d.set_item("f1", r.per_class.iter().map(|c| c.f1).collect::<Vec<_>>())?;
    d.set_item("precision", r.per_class.iter().map(|c| c.precision).collect::<Vec<_>>())?;
    d.set_item("recall", r.per_class.iter().map(|c| c.recall).collect::<Vec<_>>())?;
    d.set_item("confusion", r.confusion.clone())?;
    Ok(d)
}

#[pyfunction]
fn evaluate_predictions<'py>(
    py: Python<'py>,
    preds: Vec<usize>,
    gold: Vec<usize>,
    n_classes: usize,
) -> PyResult<Bound<'py, PyDict>> {
    report_dict(
        py,
        &harness::evaluate_predictions(&preds, &gold, n_classes).map_err(py_err)?,
    )
}

#[pyfunction]
fn disagree<'py>(py: Python<'py>, a: Vec<usize>, b: Vec<usize>, gold: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
    let r = harness::disagree(&a, &b, &gold).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("n_total", r.n_total)?;
    d.set_item("n_disagree", r.n_disagree)?;
    d.set_item("a_correct", r.a_correct)?;
    d.set_item("b_correct", r.b_correct)?;
    d.set_item("both_wrong", r.both_wrong)?;
    Ok(d)
}

/// Trains from a config file and TSVs, writing the run directory `out`.
/// Returns the metrics log as a list of dicts.
#[pyfunction]
fn train<'py>(
    py: Python<'py>,
    config: PathBuf,
    train: PathBuf,
    dev: PathBuf,
    out: PathBuf,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let log = py
        .detach(|| {
            let cfg = TrainConfig::load(&config)?;
            harness::train_files(&cfg, &train, &dev, &out).map(|o| o.log)
        })
        .map_err(py_err)?;
    log.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("epoch", r.epoch)?;
            d.set_item("train_loss", r.train_loss)?;
            d.set_item("dev_accuracy", r.dev_accuracy)?;
            d.set_item("dev_macro_f1", r.dev_macro_f1)?;
            d.set_item("dev_max_attention", r.dev_max_attention)?;
            Ok(d)
        })
        .collect()
}

/// A trained classifier loaded from a checkpoint in a run directory.
#[pyclass(name = "Model")]
struct PyModel {
    inner: Trained,
}

impl PyModel {
    fn encode(&self, texts: &[String]) -> Vec<Vec<usize>> {
        let l = self.inner.config.model.seq_len;
        texts.iter().map(|t| self.inner.vocab.tokenize(t, l)).collect()
    }
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(ckpt: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Trained::load(&ckpt).map_err(py_err)?,
        })
    }

    fn count_params(&self) -> usize {
        self.inner.model.count_params()
    }

    #[getter]
    fn attention_kind(&self) -> String {
        self.inner.config.model.attention_kind.to_string()
    }

    fn tokenize(&self, text: &str) -> Vec<usize> {
        self.inner.vocab.tokenize(text, self.inner.config.model.seq_len)
    }

    fn logits(&self, texts: Vec<String>) -> PyResult<Vec<Vec<f64>>> {
        let (logits, _) = self.inner.model.logits(&self.encode(&texts)).map_err(py_err)?;
        Ok(from_mat(&logits))
    }

    fn predict(&self, texts: Vec<String>) -> PyResult<Vec<usize>> {
        self.inner.model.predict(&self.encode(&texts)).map_err(py_err)
    }

    /// L×L attention map of each text.
    fn attention(&self, texts: Vec<String>) -> PyResult<Vec<Vec<Vec<f64>>>> {
        let (_, diag) = self.inner.model.logits(&self.encode(&texts)).map_err(py_err)?;
        Ok(diag.attn.iter().map(from_mat).collect())
    }

    /// Mean-pooled encoding of each text.
    fn embed(&self, texts: Vec<String>) -> PyResult<Vec<Vec<f64>>> {
        let (_, diag) = self.inner.model.logits(&self.encode(&texts)).map_err(py_err)?;
        Ok(from_mat(&diag.pooled))
    }

    /// Metrics and predictions on a labelled TSV.
    fn evaluate<'py>(&self, py: Python<'py>, tsv: PathBuf) -> PyResult<(Bound<'py, PyDict>, Vec<usize>)> {
        let examples = self.inner.encode_file(&tsv).map_err(py_err)?;
        let ev = harness::evaluate(&self.inner.model, &examples, self.inner.config.batch_size).map_err(py_err)?;
        Ok((report_dict(py, &ev.report)?, ev.preds))
    }
}

#[pymodule]
fn qat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(ghz_state, m)?)?;
    m.add_function(wrap_pyfunction!(interference_attention, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_predictions, m)?)?;
    m.add_function(wrap_pyfunction!(disagree, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
