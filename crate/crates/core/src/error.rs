use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A structured input violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),
    /// Adaptive quadrature hit its subdivision limit.
    #[error("quadrature did not converge: best estimate {estimate:e}, error bound {bound:e}")]
    NonConvergence { estimate: f64, bound: f64 },
    /// A root or extremum was requested outside the sampled range.
    #[error("range error: {0}")]
    Range(String),
    /// The operation does not apply to the given combination of inputs.
    #[error("usage error: {0}")]
    Usage(String),
    /// Scaling-collapse fit failure.
    #[error("fit error: {0}")]
    Fit(String),
    /// A simulation would exceed the configured memory cap.
    #[error("memory guard: {0}")]
    Memory(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn ensure_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
    }
}
