use num_complex::Complex64;
use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Non-finite or otherwise malformed input.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A formula was evaluated outside its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver exhausted its budget without converging.
    #[error("iteration failure: {0}")]
    IterationFailure(String),

    /// An eigenvalue was not simple at the working tolerance.
    #[error("degenerate eigenproblem: {0}")]
    Degeneracy(String),

    /// A shifted linear solve was requested too close to an eigenvalue.
    #[error(
        "singular shifted system: shift {shift} is within {distance:.3e} of eigenvalue {eigenvalue}"
    )]
    SingularShift {
        shift: Complex64,
        eigenvalue: Complex64,
        distance: f64,
    },

    /// The parameters do not lie on the Hopf variety at the working band.
    #[error("not on the Hopf variety: |delta| = {delta:.6e} exceeds band {band:.6e}")]
    NotOnSigma { delta: f64, band: f64 },

    /// Adaptive integration failed (step underflow, blow-up).
    #[error("integration failure at t = {t:.6e}: {reason}")]
    IntegrationFailure { reason: String, t: f64 },

    /// A scan found no sign change to bracket.
    #[error("bracketing failure: {0}")]
    Bracketing(String),

    /// Periodic-orbit shooting did not converge; carries the residual history.
    #[error("periodic orbit not found: {reason}; residual history {history:?}")]
    OrbitNotFound { reason: String, history: Vec<f64> },

    /// Two internal routes disagreed beyond tolerance.
    #[error("internal consistency error: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
