use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension guard exceeded: {what} needs {requested} qubits/variables, limit is {limit}")]
    GuardExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("noise parameter kappa={0} outside [0, 1]")]
    KappaOutOfRange(f64),

    #[error("Kraus operators are not trace preserving: max residual {residual:e}")]
    Completeness { residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parameter vector has length {actual}, circuit expects {expected}")]
    ParameterCount { expected: usize, actual: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid route: {0}")]
    InvalidRoute(String),

    #[error("objective returned non-finite value {value} at {params:?}")]
    NonFinite { value: f64, params: Vec<f64> },

    #[error("incompatible backend: {0}")]
    IncompatibleBackend(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
