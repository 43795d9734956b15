use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime in the supported range (5 <= p < 2^31)")]
    InvalidPrime(u64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("linear system has no solution")]
    Infeasible,
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("value range violated: {0}")]
    ValueRange(String),
    #[error("polynomial is not integer-valued")]
    NotIntegerValued,
    #[error("degree {degree} exceeds the allowed bound {bound}")]
    DegreeTooLarge { degree: usize, bound: usize },
    #[error("enumeration of {needed} points exceeds the budget of {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },
    #[error("rank hypothesis failed: rank {rank}, need at least {needed}")]
    RankHypothesisFailed { rank: usize, needed: usize },
    #[error("shift vectors are not independent after multiplying by A")]
    DependentShifts,
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error("upper-left entry of the matrix is zero; use a pivot change first")]
    ZeroPivot,
    #[error("quadratic form has zero matrix")]
    ZeroForm,
    #[error("subspace is isotropic: {0}")]
    Isotropic(String),
    #[error("family is not consistent")]
    Inconsistent,
    #[error("no frequency found within budget")]
    FrequencyNotFound,
    #[error("hypothesis does not hold: {0}")]
    HypothesisFailed(String),
    #[error("outside the theorem regime: {0}")]
    TheoremRegime(String),
    #[error("dichotomy violated: {0}")]
    DichotomyViolation(String),
    #[error("parse error: {0}")]
    Parse(String),
}
