use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("{0} qubits requested; at most {max} are supported", max = crate::pauli::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("qubit {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("rotation axis must be a single unit-coefficient Pauli, got {0}")]
    InvalidAxis(String),

    #[error("invalid Pauli label `{0}`")]
    InvalidPauli(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid noise channel {id}: {reason}")]
    InvalidChannel { id: usize, reason: String },

    #[error("observable must be Hermitian with real Pauli coefficients")]
    NonHermitianObservable,

    #[error("Lindblad rate must be non-negative, got {0}")]
    NegativeRate(f64),

    #[error("gate at layer {layer} is not Clifford; use the general shading pipeline instead")]
    NonClifford { layer: usize },

    #[error("{n} qubits exceeds the dense simulation budget of {max}")]
    DenseBudget { n: usize, max: usize },

    #[error("{0}")]
    Usage(String),

    #[error("schema error at `{pointer}`: {message}")]
    Schema { pointer: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
