use thiserror::Error;

/// Errors raised while constructing or evaluating models.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("load vector must be nonzero and finite")]
    InvalidLoad,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised by the limit analysis and root finding drivers.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid bracket: ell({lo}) = {ell_lo}, ell({hi}) = {ell_hi} does not straddle 1")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        ell_lo: f64,
        ell_hi: f64,
    },
    #[error("ell evaluation at lambda = {lambda} did not converge (last estimate {estimate}); bracket [{lo}, {hi}]")]
    EllNotConverged {
        lambda: f64,
        estimate: f64,
        lo: f64,
        hi: f64,
    },
    #[error("model does not provide a parameter family")]
    NotAFamily,
    #[error(transparent)]
    Model(#[from] ModelError),
}
