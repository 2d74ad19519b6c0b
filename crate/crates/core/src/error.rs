use thiserror::Error;

use crate::equilibria::Branch;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// `s - d` is too close to zero for the interpolation term.
    #[error("degenerate denominator: s - d = {gap:e}")]
    DegenerateDenominator { gap: f64 },

    #[error("r_s equals r_d; the equal-returns closed form applies instead")]
    EqualReturns,

    #[error("closed form is only available for n = 1 (got n = {0})")]
    UnsupportedN(u32),

    #[error("quartic leading coefficient is zero")]
    DegenerateLeadingCoefficient,

    #[error("equilibrium {0} is absent")]
    MissingEquilibrium(Branch),

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: f64, limit: f64 },

    #[error("invalid grid resolution {0}")]
    InvalidResolution(f64),

    /// A residual or agreement check on a computed quantity failed.
    #[error("numerical contract violated: {0}")]
    ContractViolation(String),
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
