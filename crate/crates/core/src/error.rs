use thiserror::Error;

use crate::quadrature::IntegralResult;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidInput(String),

    #[error("quadrature did not converge (value {:.12e}, error estimate {:.3e}, {} subdivisions)", best.value, best.error_estimate, best.subdivisions_used)]
    NonConvergence { best: IntegralResult },

    #[error("integrand returned a non-finite value {value} at x = {x}")]
    NonFiniteIntegrand { x: f64, value: f64 },

    #[error("tail contribution fails to contract beyond u = {at:.3e}")]
    DivergentTail { at: f64, best: IntegralResult },

    #[error("test function has zero norm")]
    ZeroNorm,

    #[error("mesh too coarse: near-diagonal correction is {fraction:.3} of the row sum at x = {x:.4e}")]
    MeshTooCoarse { x: f64, fraction: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NoConvergence {
        lambda: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("bound function exceeds ceiling {ceiling} at x = {x:.4e}")]
    UnboundedAbove { x: f64, ceiling: f64 },

    #[error("analysis failure: {0}")]
    AnalysisFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
