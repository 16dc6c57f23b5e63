use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("index {index} does not fit depth {depth}")]
    IndexOutOfRange { depth: usize, index: u64 },

    #[error("box at depth {depth} lies outside the dense lattice of depth {max_depth}")]
    DepthOverflow { depth: usize, max_depth: usize },

    #[error("dense lattice too large: depth {depth} in dimension {dim}")]
    LatticeTooLarge { depth: usize, dim: usize },

    #[error("invalid mass {0}: masses must be finite and nonnegative")]
    InvalidMass(f64),

    #[error("relevant poset exceeds the budget of {budget} boxes")]
    PosetBudgetExceeded { budget: usize },

    #[error("constraint set is empty")]
    EmptySet,

    #[error("operation requires a measure/set on T (d = 1), got d = {0}")]
    NotOnTree(usize),

    #[error("atom {0} is not contained in any element of the constraint set")]
    SupportViolation(String),

    #[error("invalid target {0}: targets must be finite and nonnegative")]
    InvalidTarget(f64),

    #[error("constraint set of {size} boxes exceeds the solver budget of {budget}")]
    SolverBudgetExceeded { size: usize, budget: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
