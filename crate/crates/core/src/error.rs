use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("dimension mismatch: step {step} is {rows}x{cols}, expected {dimension}x{dimension}")]
    DimensionMismatch {
        step: usize,
        rows: usize,
        cols: usize,
        dimension: usize,
    },

    #[error("table has {len} entries but {needed} are required")]
    TableTooShort { len: usize, needed: usize },

    #[error("unknown formula {0:?}")]
    UnknownFormula(String),

    #[error("index ({m}, {n}) outside the window [0, {window}]")]
    IndexOutOfWindow { m: usize, n: usize, window: usize },

    #[error("window {window} exceeds the system horizon {horizon}")]
    WindowBeyondHorizon { window: usize, horizon: usize },

    #[error("test vector {0} does not exist")]
    UnknownVector(usize),

    #[error("parameter {name} = {value} violates {constraint}")]
    InvalidParameter {
        name: String,
        value: f64,
        constraint: &'static str,
    },

    #[error("sequence {name}: {reason}")]
    InvalidSequence { name: String, reason: String },

    #[error("certificate kind {0} is not accepted here")]
    WrongCertificateKind(&'static str),

    #[error("no growth: tau(c) <= 1 for every c in [1, {window}]")]
    NoGrowth { window: usize },

    #[error("window {window} is too small (need at least {needed})")]
    WindowTooSmall { window: usize, needed: usize },

    #[error("Lyapunov table has no entry for (m={m}, n={n}, vector={vector})")]
    MissingLyapunovEntry { m: usize, n: usize, vector: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &str, value: f64, constraint: &'static str) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            value,
            constraint,
        }
    }
}
