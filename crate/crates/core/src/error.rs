//! Error type shared by every module of the core crate.

use alloc::string::String;

/// Result alias for this crate.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of model construction, propagation and analysis.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter violated its documented precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        /// Parameter name as it appears in configs.
        name: &'static str,
        /// Human-readable reason.
        reason: String,
    },
    /// Sector index beyond what the model accepts.
    #[error("sector {n} exceeds the allowed maximum {max}")]
    SectorTooLarge {
        /// Requested sector.
        n: usize,
        /// Largest accepted sector.
        max: usize,
    },
    /// The state would need more sectors than the configured cap.
    #[error("truncation needs nmax = {needed}, above the sector cap {cap}")]
    TruncationCap {
        /// Sector count the tolerance requires.
        needed: usize,
        /// Configured cap.
        cap: usize,
    },
    /// The tridiagonal QL iteration failed to converge.
    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    EigenNoConvergence {
        /// Eigenvalue being isolated when the iteration gave up.
        index: usize,
        /// Iteration budget that was exhausted.
        iterations: usize,
    },
    /// A sector norm drifted under what should be unitary propagation.
    #[error("norm of sector {sector} drifted by {drift:e} at sample {sample}")]
    TruncationBreach {
        /// Offending sector.
        sector: usize,
        /// Sample index.
        sample: usize,
        /// Absolute norm drift.
        drift: f64,
    },
    /// The input state is not normalized.
    #[error("state norm deviates from 1 by {deviation:e}")]
    NotNormalized {
        /// `|1 - Σ|c|²|`.
        deviation: f64,
    },
    /// Series carries no information for the requested analysis.
    #[error("degenerate series: {0}")]
    Degenerate(&'static str),
    /// Not enough data for the requested analysis.
    #[error("insufficient data: {what} (have {have}, need {need})")]
    InsufficientData {
        /// What was being counted.
        what: &'static str,
        /// Available count.
        have: usize,
        /// Required count.
        need: usize,
    },
    /// Classical integration drifted past its conservation gate.
    #[error("energy drift {drift:e} exceeds tolerance {tolerance:e} at step {step}")]
    DriftBreach {
        /// Relative drift observed.
        drift: f64,
        /// Tolerance in force.
        tolerance: f64,
        /// Step at which the breach was detected.
        step: usize,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
