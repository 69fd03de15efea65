use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iteration did not reach the requested accuracy.
    #[error("{what} did not converge (achieved {achieved:e})")]
    Convergence { what: String, achieved: f64 },

    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    /// Rejection sampling cannot make progress.
    #[error("sampling aborted: {0}")]
    Sampling(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn ensure_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite, got {x}"))
    }
}
