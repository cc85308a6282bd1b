use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("impulse {delta} is not admissible at node x = {x}")]
    InadmissibleImpulse { x: f64, delta: f64 },

    #[error("restriction domain must contain every nonpositive node (missing x = {0})")]
    DomainMissingNode(f64),

    #[error("zero pivot at row {0} in tridiagonal solve")]
    ZeroPivot(usize),

    #[error("singular policy matrix: {0}")]
    SingularPolicy(String),

    #[error("generator matrix is not an SDD L0-matrix at row {0}")]
    GeneratorNotSdd(usize),

    #[error("matrix has a negative entry at ({0}, {1})")]
    NegativeEntry(usize, usize),

    #[error("matrix is not weakly diagonally dominant (rows {0:?})")]
    NotWdd(Vec<usize>),

    #[error("enumeration budget exceeded: {0} policies")]
    BudgetExceeded(u128),

    #[error("no enumerated policy solves the restricted QVI")]
    NoVerifiedPolicy,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
