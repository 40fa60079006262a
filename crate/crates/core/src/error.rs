use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter left the domain on which the requested quantity is defined
    /// (divergent integral, moment outside its integrability window, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A gamma-type function was evaluated at a pole.
    #[error("pole at {0}")]
    Pole(String),

    /// Adaptive quadrature failed to reach the requested tolerance. The
    /// payload carries the achieved error estimate.
    #[error("quadrature did not converge: achieved error estimate {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    /// A structurally invalid argument (length mismatch, non-decreasing
    /// partition parts, degenerate kernel configuration, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
