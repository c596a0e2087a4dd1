use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{param}` = {value} out of domain: requires {bound}")]
    ParamOutOfDomain {
        param: &'static str,
        value: f64,
        bound: &'static str,
    },

    #[error("{family} copula has no density (singular component)")]
    NoDensity { family: &'static str },

    #[error("conditional distribution undefined at u = {u}")]
    ConditionalUndefined { u: f64 },

    #[error("h-function inversion failed to bracket a root (u = {u}, w = {w})")]
    RootNotBracketed { u: f64, w: f64 },

    #[error("probability {p} outside the open unit interval")]
    QuantileDomain { p: f64 },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate series: zero sample variance")]
    DegenerateSeries,

    #[error("negative combined variance {0}")]
    NegativeVariance(f64),

    #[error("quadrature did not converge after {doublings} panel doublings (last change {last_change:e})")]
    TruncationNotConverged { doublings: u32, last_change: f64 },

    #[error("likelihood search failed: {0}")]
    SearchFailed(String),

    #[error("invalid market state: {0}")]
    InvalidMarket(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("row {row}, column `{column}`: {reason}")]
    Parse {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("price series is empty")]
    EmptySeries,

    #[error("no price rows fall inside {0}")]
    EmptyWindow(String),

    #[error("internal numerical error: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by the numerics rather than by the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootNotBracketed { .. }
                | Error::NegativeVariance(_)
                | Error::TruncationNotConverged { .. }
                | Error::SearchFailed(_)
                | Error::Internal(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
