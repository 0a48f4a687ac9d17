//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("division by an expression that canonicalizes to zero")]
    DivisionByZero,
    #[error("exponent {0} has denominator larger than the configured limit {1}")]
    ExponentDenominator(String, i64),
    #[error("cannot raise a sum to the fractional power {0}")]
    NonMonomialRadical(String),
    #[error("no exact rational {1}-th root of coefficient {0}")]
    NonRationalRoot(String, i64),
    #[error("substitution binding for {0} mentions a bound symbol")]
    InvalidSubstitution(String),
    #[error("no numeric binding for symbol {0}")]
    UnboundSymbol(String),
    #[error("denominator vanishes at the evaluation point")]
    PoleAtPoint,
    #[error("numeric evaluation failed: {0}")]
    NumericFailure(String),
    #[error("forms belong to different covector bases")]
    BasisMismatch,
    #[error("operation requires a form expressed in the coordinate basis")]
    NeedsCoordinateBasis,
    #[error("singular linear system at elimination stage {stage}: {detail}")]
    SingularSystem { stage: usize, detail: String },
    #[error("structure group is degenerate: {0}")]
    SingularGroup(String),
    #[error("normalization plan mismatch: {0}")]
    PlanMismatch(String),
    #[error("reduction trace is incomplete: {0}")]
    IncompleteReduction(String),
    #[error("sampling rejected more than 90% of candidate points")]
    SamplingFailure,
    #[error("operator is not monic: the D^5 coefficient must be exactly 1")]
    NotMonic,
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parse(position: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            position,
            message: message.into(),
        }
    }

    /// Stable machine-readable tag, used by the CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DivisionByZero => "division_by_zero",
            Error::ExponentDenominator(..) => "exponent_denominator",
            Error::NonMonomialRadical(_) => "non_monomial_radical",
            Error::NonRationalRoot(..) => "non_rational_root",
            Error::InvalidSubstitution(_) => "invalid_substitution",
            Error::UnboundSymbol(_) => "unbound_symbol",
            Error::PoleAtPoint => "pole_at_point",
            Error::NumericFailure(_) => "numeric_failure",
            Error::BasisMismatch => "basis_mismatch",
            Error::NeedsCoordinateBasis => "needs_coordinate_basis",
            Error::SingularSystem { .. } => "singular_system",
            Error::SingularGroup(_) => "singular_group",
            Error::PlanMismatch(_) => "plan_mismatch",
            Error::IncompleteReduction(_) => "incomplete_reduction",
            Error::SamplingFailure => "sampling_failure",
            Error::NotMonic => "not_monic",
            Error::Parse { .. } => "parse_error",
            Error::Internal(_) => "internal",
        }
    }
}
