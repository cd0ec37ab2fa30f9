//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operation undefined on the zero polynomial")]
    ZeroPolynomial,
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("denominator is zero")]
    ZeroDenominator,
    #[error("syntax error at byte {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("exponent denominator {0} exceeds the ramification bound {1}")]
    RamificationBound(i64, i64),
    #[error("division by a series that is zero to the known precision")]
    DivisionByZeroSeries,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("requested precision {requested} exceeds available precision {available}")]
    PrecisionIncrease { requested: String, available: String },
    #[error("degree {0} exceeds the configured cap {1}")]
    DegreeCapExceeded(usize, usize),
    #[error("map is not bicritical: {0}")]
    NotBicritical(String),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("the two points coincide")]
    SamePoint,
    #[error("the join of a point with infinity is not a type II point")]
    InfiniteJoin,
    #[error("cycle is not repelling")]
    NotRepelling,
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("membership undecidable at current precision")]
    MembershipUndecidable,
    #[error("parameters lie on the degeneracy locus")]
    Degenerate,
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("map is not of the required type: {0}")]
    NotTypeD(String),
    #[error("sample point {0} lies within the hole exclusion radius")]
    HoleProximity(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
