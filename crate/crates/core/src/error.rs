use thiserror::Error;

use crate::valgroup::ExtRat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series live over different weight profiles")]
    ProfileMismatch,
    #[error("two distinct terms share the minimal weight {0} under a Type III profile")]
    AmbiguousLeading(String),
    #[error("series is not a unit")]
    NotAUnit,
    #[error("insufficient precision: need {needed}, have {available}")]
    InsufficientPrecision {
        needed: Box<ExtRat>,
        available: Box<ExtRat>,
    },
    #[error("cannot raise precision from {from} to {to}")]
    PrecisionIncrease { from: Box<ExtRat>, to: Box<ExtRat> },
    #[error("seminorm not resolved below the precision floor {0}")]
    IndeterminateFromPrecision(ExtRat),
    #[error("no term resolved below the precision floor")]
    Unresolved,
    #[error("image precision {available} falls short of the requested {needed}")]
    PrecisionUnderflow {
        needed: Box<ExtRat>,
        available: Box<ExtRat>,
    },
    #[error("radius {0} is not in the value group, not a Type II point")]
    NotTypeII(String),
    #[error("negative exponent in a Tate algebra element: {0}")]
    NegativeExponent(String),
    #[error("exponent {0} is not in Z[1/p]")]
    NotInValueGroup(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("stage {stage}: adaptedness failed: {reason}")]
    AdaptednessFailed { stage: usize, reason: String },
    #[error("adapted stage unavailable: {0}")]
    StageUnavailable(String),
    #[error("step {step}: contract violation: {reason}")]
    ContractViolation { step: usize, reason: String },
    #[error("verification failed at {location}: {reason}")]
    Verification { location: String, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code: 1 for contract violations, 2 for usage and format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Config(_) | Error::Format(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
