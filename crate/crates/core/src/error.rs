//! Error taxonomy shared by the whole workspace.

use thiserror::Error;

/// Every fallible operation in this crate returns one of these variants.
///
/// `PrecisionInsufficient` is special: it is a *retryable* condition. Inputs
/// are exact integer data, so a caller may rebuild the ambient ring at a
/// higher truncation and rerun (see [`crate::crystal::ObCrystal::lift_to_precision`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("height mismatch: {0} vs {1}")]
    HeightMismatch(u64, u64),

    #[error("point does not lie on the polygon")]
    NotOnPolygon,

    #[error("precision insufficient: need at least {needed} p-adic digits, have {have}")]
    PrecisionInsufficient { needed: u32, have: u32 },

    #[error("ring mismatch: operands live in different rings or at different precisions")]
    RingMismatch,

    #[error("non-minuscule crystal: {0}")]
    NonMinuscule(String),

    #[error("rank did not stabilize: {0}")]
    NonStabilizing(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// True when retrying at a higher working precision could succeed.
    pub fn is_precision(&self) -> bool {
        matches!(self, Error::PrecisionInsufficient { .. })
    }
}
