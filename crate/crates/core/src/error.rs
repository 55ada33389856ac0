use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index error: {0}")]
    Index(String),

    #[error("overflow: value needs {needed} bits but block width is {width}")]
    Overflow { needed: u64, width: u64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A pass-through unit saw a negative pre-activation, so the ReLU did not act as identity.
    #[error("contract violation at layer {layer}, unit {unit}: pass-through pre-activation {value} < 0")]
    ContractViolation {
        layer: usize,
        unit: usize,
        value: String,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("duplicate point: rows {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("label out of range at row {row}: {label} not in 1..={classes}")]
    LabelRange {
        row: usize,
        label: String,
        classes: u64,
    },

    #[error("projection search exhausted after {0} directions")]
    ProjectionSearchExhausted(usize),

    #[error("unknown provenance {0:?}")]
    Provenance(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Schema(e.to_string())
    }
}
