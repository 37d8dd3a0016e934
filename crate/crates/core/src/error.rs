use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("could not bracket a root of {what} (last probe {probe})")]
    BracketFailure { what: &'static str, probe: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("optimal assessment is not interior at belief {beta}: {detail}")]
    NotInterior { beta: f64, detail: String },

    #[error("curvature condition violated at a = {effort}: c'' - h r_aa = {denominator}")]
    ConcavityViolation { effort: f64, denominator: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("empty set passed to {0}")]
    EmptySet(&'static str),

    #[error("no self-confirming equilibrium found for {0}")]
    NoSce(&'static str),

    #[error("equilibrium selector does not point at an SCE: {0}")]
    SelectorNotSce(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("effective effort is not separable on the tested grid (max reconstruction error {max_error:e})")]
    TransformRejected { max_error: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BracketFailure { .. }
                | Error::NoConvergence { .. }
                | Error::Singular(_)
                | Error::Quadrature(_)
        )
    }
}
