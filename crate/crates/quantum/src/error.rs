use mipstar::mlgame::GameError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("joint dimension {0} exceeds the limit of {limit}", limit = crate::state::MAX_JOINT_DIM)]
    TooLarge(usize),
    #[error("state has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("measurement at point {point}: {msg}")]
    NotMeasurement { point: usize, msg: String },
    #[error("measurement at point {point}, outcome {outcome} is not a projector (defect {defect:.3e})")]
    NotProjective { point: usize, outcome: usize, defect: f64 },
    #[error("state is not invariant under register permutations (defect {0:.3e})")]
    NotInvariant(f64),
    #[error("arity: {0}")]
    Arity(String),
    #[error("parameter: {0}")]
    Parameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
