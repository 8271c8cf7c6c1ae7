use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit state")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("expected a {expected}-qubit state, got {actual} qubits")]
    WrongQubitCount { expected: usize, actual: usize },

    #[error("control and target qubit must differ (both {index})")]
    EqualQubits { index: usize },

    #[error("matrix is not Hermitian: max |M - M\u{2020}| entry is {max_dev:.3e}")]
    NotHermitian { max_dev: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },

    #[error("state vector norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("parameter {name} = {value} out of range")]
    ParamOutOfRange { name: &'static str, value: f64 },

    #[error("projection has no support: probability {probability:.3e}")]
    NoSupport { probability: f64 },

    #[error(
        "maximum-likelihood iteration did not converge after {iterations} iterations \
         (last trace-distance step {last_delta:.3e})"
    )]
    NonConvergence { iterations: usize, last_delta: f64 },

    #[error("count table: {0}")]
    CountTable(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
