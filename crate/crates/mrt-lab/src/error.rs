//! Crate-wide error type.
//!
//! Variants mirror the failure classes of the public operations so the CLI
//! can map them onto distinct exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested value is undefined at the given point.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation would exceed a configured memory or size budget.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The requested accuracy cannot be delivered at this precision.
    #[error("precision error: {0}")]
    Precision(String),

    /// Internal state required by the operation is missing.
    #[error("state error: {0}")]
    State(String),

    /// A bounded search ended without a hit. Carries the best candidate seen
    /// and its worst per-prime deviation so callers can widen the cap.
    #[error("search exhausted at cap {cap}: best candidate s={best} with max deviation {deviation:.6}")]
    SearchExhausted { cap: u64, best: u64, deviation: f64 },

    /// A Kusmin-Landau certificate could not be issued for the range.
    #[error("certificate refused: {0}")]
    CertificateRefused(String),

    /// An internal invariant failed; indicates a bug, not a usage error.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
