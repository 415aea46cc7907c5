use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An adaptive scheme ran out of budget before reaching its tolerance.
    /// `partial` carries the best estimate reached so far.
    #[error("unconverged: {what} (estimate {partial:e}, error {error:e}, tolerance {tolerance:e})")]
    Unconverged {
        what: String,
        partial: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("propagator oracle unconverged: resolutions differ by {rel_diff:e} (relative)")]
    OracleUnconverged { rel_diff: f64 },

    #[error("near node: |psi|^2 = {density:e} at t = {t}")]
    NearNode { density: f64, t: f64 },

    #[error("trajectory aborted at t = {t}: {reason}")]
    TrajectoryAbort { t: f64, reason: String },

    #[error("rejection envelope failure: acceptance rate {rate:e} after {proposals} proposals")]
    EnvelopeFailure { rate: f64, proposals: u64 },

    #[error("ensemble quality: {aborted} of {requested} trajectories aborted")]
    EnsembleQuality { aborted: usize, requested: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
