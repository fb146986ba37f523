//! Crate-wide error type.
//!
//! Most message-passing operations are total once their inputs satisfy the
//! documented type invariants; the fallible surface is small and enumerated
//! here so the CLI can map failures onto its two non-zero exit codes
//! (config trouble vs. numeric trouble at runtime).

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A Hermitian system stayed non-positive-definite even after diagonal jitter.
    #[error("matrix is singular or indefinite: {context}")]
    SingularMatrix { context: &'static str },

    /// Dimension request outside the supported range (e.g. more taps than subcarriers).
    #[error("bad dimensions: {context}")]
    BadDims { context: String },

    /// Two sequences that must agree in length do not.
    #[error("length mismatch in {context}: expected {expected}, got {got}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// Joint discrete enumeration would exceed the configured cap.
    #[error("joint discrete domain too large: |X|^N = {size} exceeds cap {cap}")]
    DomainTooLarge { size: u128, cap: u64 },

    /// Every candidate weight underflowed to zero while forming a discrete belief.
    #[error("degenerate discrete belief: all weights underflowed to zero")]
    DegenerateBelief,

    /// A transmit antenna has no pilot energy, so its taps are unidentifiable.
    #[error("insufficient pilots: antenna {antenna} has zero pilot energy")]
    InsufficientPilots { antenna: usize },

    /// Campaign or system configuration rejected at validation time.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that indicate bad user input rather than a numeric failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::BadDims { .. } | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
