//! Error taxonomy shared by every layer of the crate.

use thiserror::Error;

/// All domain failures. Input validation, ring-theoretic preconditions and
/// truncation-window violations each get their own variant so callers (and
/// the CLI exit-code mapping) can tell them apart without string matching.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    /// A defining polynomial mixes x-degrees or is zero/constant.
    #[error("generator {index} is not homogeneous of positive degree: {detail}")]
    NotHomogeneous { index: usize, detail: String },

    /// Background charge is nonzero; the deformation-theoretic solvers are
    /// only valid when the total generator degree equals n+1.
    #[error("background charge is {c_x}, expected 0 (sum of degrees must equal n+1)")]
    NonCalabiYau { c_x: i64 },

    #[error("bad arity: {0}")]
    BadArity(String),

    /// The charge-zero quotient admits more standard monomials than the
    /// configured cap, which signals a singular or otherwise degenerate input.
    #[error("more than {cap} charge-zero standard monomials; quotient looks infinite-dimensional")]
    NotFiniteDimensional { cap: usize },

    #[error("charge mismatch: {0}")]
    ChargeMismatch(String),

    /// An operation produced an hbar exponent below the window floor.
    /// Truncating low powers silently would corrupt every later coefficient,
    /// so this is a hard error.
    #[error("hbar exponent {exponent} fell below the window floor {floor}")]
    WindowUnderflow { exponent: i32, floor: i32 },

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("seed weight error: {0}")]
    SeedWeight(String),

    #[error("weight condition error: {0}")]
    WeightCondition(String),

    #[error("index out of range: {0}")]
    IndexRange(String),

    #[error("order exceeded: {0}")]
    OrderExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
