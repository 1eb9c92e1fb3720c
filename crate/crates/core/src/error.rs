use thiserror::Error;

use crate::sdp::SdpStatus;

/// Errors raised across the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An angle lies outside its admissible range.
    #[error("angle out of domain: {0}")]
    Domain(String),

    /// A 1-based index is outside `1..=len`.
    #[error("index {index} out of range 1..={len}")]
    Index { index: usize, len: usize },

    /// Inconsistent dimensions or invalid argument values.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The Fisher information matrix is singular or too ill-conditioned.
    #[error("parameters not identifiable for scene [{scene}]: {reason}")]
    Identifiability { scene: String, reason: String },

    /// A covariance violates the power budget.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A semidefinite subproblem did not reach optimality.
    #[error("SDP solve ended with status {status:?} (primal {primal:.3e}, dual {dual:.3e}, gap {gap:.3e})")]
    Solver {
        status: SdpStatus,
        primal: f64,
        dual: f64,
        gap: f64,
    },

    /// A PDD subproblem failed; the trace up to the failure is attached.
    #[error("PDD aborted at outer iteration {outer}, inner iteration {inner}: {source}")]
    PddAborted {
        outer: usize,
        inner: usize,
        trace: Vec<crate::tx::PddRecord>,
        #[source]
        source: Box<Error>,
    },

    /// Admittance synthesis failed because `I + Θ` is singular.
    #[error("network synthesis failed: {0}")]
    Synthesis(String),

    /// A DoA estimate could not be mapped back to physical angles.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// Invalid experiment configuration; `path` names the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
