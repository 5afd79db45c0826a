use thiserror::Error;

/// Errors raised by the numerical routines and the model layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// An iterative method did not meet its tolerance in time. `estimate`
    /// is the last partial value.
    #[error("{func} did not converge after {iterations} iterations (partial estimate {estimate:e})")]
    Convergence {
        func: &'static str,
        iterations: usize,
        estimate: f64,
    },

    /// Model or configuration parameters violate a constraint.
    #[error("invalid parameters: {0}")]
    Validation(String),

    /// Density evaluated at a point where it is infinite.
    #[error("density is singular at x = {x}")]
    Singularity { x: f64 },

    /// Density has a jump at `x`; both one-sided limits are reported.
    #[error("density is discontinuous at x = {x} (left limit {left}, right limit {right})")]
    Discontinuity { x: f64, left: f64, right: f64 },

    /// Option price outside the no-arbitrage range.
    #[error("call price {price} violates the {bound} bound {limit}")]
    BoundViolation {
        bound: &'static str,
        price: f64,
        limit: f64,
    },

    /// Root not bracketed by the search interval.
    #[error("no root bracketed in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    /// Quantity has no representation for the given parameters.
    #[error("not representable: {0}")]
    NotRepresentable(String),

    /// Input data carries no usable information.
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::Bracket { .. } | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
