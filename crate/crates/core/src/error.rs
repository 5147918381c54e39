use thiserror::Error;

use crate::construction::NearMiss;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("edge {0} has a non-positive length")]
    NonPositiveLength(String),
    #[error("edge {edge} names undeclared vertex {vertex}")]
    DanglingEndpoint { edge: String, vertex: String },
    #[error("duplicate name {0}")]
    DuplicateName(String),
    #[error("invalid name {0:?}")]
    InvalidName(String),
    #[error("point {0} does not lie on the graph")]
    PointNotOnGraph(String),
    #[error("lattice model would need {0} vertices")]
    ModelTooLarge(usize),

    #[error("operands live on different graphs")]
    GraphMismatch,
    #[error("invalid rational function: {0}")]
    InvalidFunction(String),
    #[error("firing distance exceeds the next event distance")]
    EpsTooLarge,
    #[error("firing distance must be positive")]
    NonPositiveDistance,
    #[error("set is not a closed vertex set of the subdivision: {0}")]
    XNotClosed(String),

    #[error("divisor has a negative coefficient away from the base point")]
    NegativeCoefficientAwayFromP,
    #[error("divisor is not effective")]
    NotEffective,

    #[error("divisors have different degrees")]
    DegreeMismatch,
    #[error("Gram matrix is singular")]
    SingularGram,

    #[error("divisor rank is not positive")]
    RankNotPositive,
    #[error("divisor is not very special")]
    NotVerySpecial,

    #[error("arcs of circle {0} between consecutive gluing points have equal length")]
    ArcLengthClash(usize),
    #[error("genus {g} is too small for a chain of {a} circles (need g >= a + 3)")]
    GenusTooSmall { g: usize, a: usize },
    #[error("mark placement violates a constraint: {0}")]
    MarkConstraintViolated(String),
    #[error("rank out of range: {0}")]
    RankOutOfRange(String),
    #[error("degree {degree} outside the window [2, {max}]")]
    DegreeWindowViolated { degree: i64, max: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sampled divisor {divisor} has rank below {expected}")]
    RankLowerBoundViolated { divisor: String, expected: i64 },
    #[error("no certified divisor after {attempts} attempts")]
    BudgetExhausted {
        attempts: usize,
        near_misses: Vec<NearMiss>,
    },
}
