use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Variants are grouped so callers can map them onto "bad input" versus
/// "numerical failure" without matching every case.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("invalid log: {0}")]
    InvalidLog(String),

    #[error("neutral driving direction, the caller must hold the last valid direction")]
    NeutralDirection,

    #[error("turn slip is singular at contact speed {speed} m/s")]
    SingularTurnSlip { speed: f64 },

    #[error("vehicle at standstill (|v_x| = {speed} m/s), dynamic model undefined")]
    Standstill { speed: f64 },

    #[error("steady state not reached after {seconds} s of simulated time")]
    NoConvergence { seconds: f64 },

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("rank-deficient regressor: {0}")]
    RankDeficient(String),

    #[error("covariance lost positive definiteness: {0}")]
    Covariance(String),

    #[error("no temporal overlap between estimate and reference")]
    NoOverlap,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::RankDeficient(_)
                | Error::Covariance(_)
                | Error::SingularTurnSlip { .. }
        )
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
