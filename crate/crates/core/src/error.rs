use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, QatError>;

#[derive(Debug, Error)]
pub enum QatError {
    #[error("wire {wire} out of range for {n_qubits}-qubit register")]
    WireOutOfRange { wire: usize, n_qubits: usize },

    #[error("two-qubit gate needs distinct wires, got {0} twice")]
    DuplicateWire(usize),

    #[error("qubit count {0} outside supported range 1..=8")]
    QubitCount(usize),

    #[error("parameter slot {slot} missing (have {available} values)")]
    MissingParameter { slot: usize, available: usize },

    #[error("input feature {index} missing (have {available} values)")]
    MissingFeature { index: usize, available: usize },

    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },

    #[error("non-finite input value at position {0}")]
    NonFinite(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{what} ({dim}) not divisible by head count {heads}")]
    HeadDivisibility {
        what: &'static str,
        dim: usize,
        heads: usize,
    },

    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("token id {id} out of range for vocabulary of {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },

    #[error("unknown tensor node {0}")]
    UnknownNode(usize),

    #[error("backward requires a scalar (1x1) output, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },

    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("missing parameter array `{0}`")]
    MissingArray(String),

    #[error("length mismatch: {0}")]
    Length(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl QatError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QatError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (files, flags, config values)
    /// rather than an internal failure.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, QatError::UnknownNode(_) | QatError::NotScalar { .. })
    }
}
