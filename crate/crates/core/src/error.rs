use thiserror::Error;

pub type Result<T> = std::result::Result<T, AvcError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AvcError {
    #[error("invalid channel: {}", .0.join("; "))]
    InvalidChannel(Vec<String>),

    #[error("alphabet mismatch: expected size {expected}, got {got}")]
    AlphabetMismatch { expected: usize, got: usize },

    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    #[error("empty sequence")]
    EmptySequence,

    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("blocklength must be positive")]
    ZeroBlocklength,

    #[error("information density undefined at x={x}, y={y}: zero output probability")]
    UndefinedPoint { x: usize, y: usize },

    #[error("distribution is not an exact type with denominator {n}")]
    NotAType { n: usize },

    #[error("solver did not converge after {iterations} iterations (gap {gap:.3e}): {detail}")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        detail: String,
    },

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("channel is symmetrizable: capacity is zero")]
    Symmetrizable,

    #[error("pair test violates uniqueness: Z(x,x̄,y)·Z(x̄,x,y) = 1")]
    InvalidTest,

    #[error("infeasible input type: {0}")]
    InfeasibleType(String),

    #[error("enumeration guard exceeded: {what} needs {needed} items, limit {limit}")]
    GuardExceeded {
        what: String,
        needed: u128,
        limit: u128,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),
}
