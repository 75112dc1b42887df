use thiserror::Error;

/// Errors raised by the simulation and diagnostic layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("non-finite {what} at t = {t}")]
    NumericDomain { what: &'static str, t: f64 },
    #[error("estimator error: {0}")]
    Estimator(String),
    #[error("{failed} of {total} paths hit a numeric failure (limit 1%)")]
    NumericFailureRate { failed: usize, total: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
