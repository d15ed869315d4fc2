use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for {num_qubits}-qubit register")]
    TargetOutOfRange { qubit: usize, num_qubits: usize },

    #[error("gate targets must be distinct, got ({0}, {0})")]
    DuplicateTargets(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis index {index} out of range for dimension {dim}")]
    BasisIndexOutOfRange { index: usize, dim: usize },

    #[error("brick wall circuits need an even number of qubits, got {0}")]
    OddQubitCount(usize),

    #[error("{layers} layers but {gates} initial gates")]
    LayerCountMismatch { layers: usize, gates: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("translation classes need a periodic brick wall circuit")]
    TranslationUnsupported,

    #[error("gate is not parity sparse (off-pattern magnitude {0:e})")]
    NotParitySparse(f64),

    #[error("gate is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("polar retraction is degenerate: smallest singular value {0:e}")]
    DegenerateRetraction(f64),

    #[error("tangent vectors live at different base points")]
    BaseMismatch,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("objective {value} violates the lower bound {bound}")]
    BoundViolation { value: f64, bound: f64 },

    #[error("Hamiltonian needs at least 2 sites, got {0}")]
    TooFewSites(usize),

    #[error("unsupported Trotter order {0} (expected 1, 2 or 4)")]
    UnsupportedOrder(u32),

    #[error("dense oracle limited to {cap} qubits, requested {qubits}")]
    DenseSizeCap { qubits: usize, cap: usize },

    #[error("Krylov propagation did not converge (subspace {dim}, error estimate {estimate:e})")]
    KrylovNotConverged { dim: usize, estimate: f64 },

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
