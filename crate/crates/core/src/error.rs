use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("map is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported system dimension {0}; only qubits (d = 2) are supported")]
    UnsupportedDimension(usize),
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("rotation axis has zero length")]
    ZeroAxis,
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("noise model table incomplete: {0}")]
    ModelTableIncomplete(String),
    #[error("map is not completely positive and trace preserving: {0}")]
    NotCptp(String),
    #[error("residual G^T G~ is not unitary (deviation {0:.3e})")]
    NotUnitaryResidual(f64),
    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("eigenvalue solver failed: {0}")]
    EigSolverFailure(String),
    #[error("degenerate noise: {0}")]
    DegenerateNoise(String),
    #[error("order-{order} formula needs lower orders to vanish, but p({lower}) = {value:.3e}")]
    FormulaPreconditionViolated { order: usize, lower: usize, value: f64 },
    #[error("Taylor coefficient extraction is ill-conditioned: {0}")]
    TaylorIllConditioned(String),
    #[error("Clifford closure exceeded 24 elements")]
    ClosureOverflow,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
