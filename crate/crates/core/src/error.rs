use thiserror::Error;

/// Errors raised by the simulation and excitation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("duplicate qubit index {0} in gate support")]
    DuplicateQubit(usize),
    #[error("gate width {0} unsupported (1..=4 qubits)")]
    GateWidth(usize),
    #[error("matrix of dimension {found} does not fit a {expected}-dimensional gate")]
    GateMatrixShape { expected: usize, found: usize },
    #[error("gate flagged unitary deviates from unitarity by {0:e}")]
    NotUnitary(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("expectation value has imaginary part {0:e}")]
    NonRealExpectation(f64),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("parameter vector has length {found}, circuit expects {expected}")]
    ParameterCount { expected: usize, found: usize },
    #[error("invalid insertion: {0}")]
    InvalidInsertion(String),
    #[error("invalid excitation basis: {0}")]
    InvalidBasis(String),
    #[error("invalid momentum: {0}")]
    InvalidMomentum(String),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),
    #[error("empty effective subspace (largest norm eigenvalue {0:e})")]
    EmptySubspace(f64),
    #[error("symmetry does not commute with the Hamiltonian: {0}")]
    SymmetryMismatch(String),
    #[error("eigendecomposition failed")]
    Eigen,
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("{0}")]
    Unsupported(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
