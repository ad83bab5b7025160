//! Error type shared by every module in the crate.

use thiserror::Error;

/// Unified error for laboratory operations.
///
/// Callers that drive experiments map these onto process exit codes:
/// configuration problems are distinct from resource exhaustion and from
/// numerical-quality failures, so the variants keep those classes apart.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A hard cap (memory, enumeration count, recursion depth) was exceeded.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A coefficient table does not cover the indices an evaluation needs.
    #[error("coefficient table too short: have {have}, need {need}")]
    TableTooShort { have: u64, need: u64 },

    /// Evaluation requested at or near a pole, or outside the supported region.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature or series failed to reach its accuracy target.
    #[error("precision failure: {0}")]
    Precision(String),

    /// The asymptotic parameter schedule is not usable at the requested size.
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    /// Cache or report file could not be read or written.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A cache file exists but fails validation.
    #[error("cache format error: {0}")]
    CacheFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
