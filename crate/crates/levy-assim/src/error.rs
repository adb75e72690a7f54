use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("initial density has empty support on the grid")]
    EmptySupport,

    /// The Bayes denominator underflowed: the observation is wildly
    /// inconsistent with the prior support. Surfaced, never silently
    /// renormalized away.
    #[error("degenerate evidence at t={t}: likelihood x prior integrates to zero")]
    DegenerateEvidence { t: f64 },

    /// Blow-up guard tripped: a pre-clip value exceeded 10x the previous
    /// field maximum in a single explicit step.
    #[error("time-stepping instability at t={t}: field grew more than 10x in one step (dt too large?)")]
    Instability { t: f64 },

    #[error("density snapshot is identically zero")]
    ZeroDensity,

    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    #[error("particle weights collapsed to zero: no particle is consistent with the observations")]
    WeightCollapse,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error in {file}: {msg}")]
    Parse { file: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
