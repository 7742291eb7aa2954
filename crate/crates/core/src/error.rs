use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("expected {expected} components, got {found}")]
    ComponentCount { expected: usize, found: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("matrix has non-positive trace {0:e}")]
    ZeroTrace(f64),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("function undefined at eigenvalue {0:e}")]
    Domain(f64),

    #[error("matrix is singular: eigenvalue {eigenvalue:e} below threshold {threshold:e}")]
    Singular { eigenvalue: f64, threshold: f64 },

    #[error("degenerate pair: squared distance {0:e} too small")]
    DegeneratePair(f64),

    #[error("path violates the continuity equation at step {step} (residual {residual:e})")]
    InvalidPath { step: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
