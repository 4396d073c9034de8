//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Two values (or a value and an assignment) live on different chains.
    #[error("chain mismatch: {0}")]
    ChainMismatch(String),

    /// An operation needed a position the assignment does not define, or was
    /// handed a set outside its expected domain.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// `norm` of an assignment with empty domain.
    #[error("norm of an assignment with empty domain")]
    EmptyDomain,

    /// A model or term violates a structural invariant (bad distribution,
    /// dangling edge, empty option list, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Syntax error in a game file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The linear program has no feasible point.
    #[error("linear program is infeasible")]
    Infeasible,

    /// The linear program is unbounded below.
    #[error("linear program is unbounded")]
    Unbounded,

    /// A fixpoint-only operation was applied to a non-fixpoint (or a
    /// post-fixpoint-only operation to a non-post-fixpoint).
    #[error("precondition violated: {0}")]
    NotFixpoint(String),

    /// Brute-force enumeration refused to run: too many strategies.
    #[error("strategy space too large: {0} strategies exceeds the enumeration guard")]
    StrategySpaceTooLarge(u128),

    /// An internal soundness check failed. This is a bug, not bad input:
    /// a solver returned a non-fixpoint, solvers disagreed, or an iteration
    /// exceeded its proven bound.
    #[error("internal soundness check failed: {0}")]
    Soundness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
