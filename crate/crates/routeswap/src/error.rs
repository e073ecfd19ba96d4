//! Crate-wide error type.

use thiserror::Error;

use crate::network::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("negative flow {value} on link `{link}`")]
    NegativeLinkFlow { link: String, value: f64 },

    #[error("invalid network ({} violation(s)): {}", .0.len(), format_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("unknown route `{0}`")]
    UnknownRoute(String),

    #[error("unknown link `{0}`")]
    UnknownLink(String),

    #[error("routes `{from}` and `{to}` belong to different OD pairs")]
    MismatchedOdPairs { from: String, to: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "over-swapping on route `{route}`: total swap proportion {row_sum} exceeds 1 \
         (would drive the flow negative)"
    )]
    OverSwapping { route: String, row_sum: f64 },

    #[error("infeasible flow state: {0}")]
    Infeasible(String),

    #[error("window of {got} states is too short: need at least {needed}")]
    WindowTooShort { needed: usize, got: usize },

    #[error(
        "equilibrium solver stopped after {iterations} iterations with relative gap \
         {achieved_gap:e} (target {target_gap:e})"
    )]
    UeNotConverged {
        iterations: u64,
        achieved_gap: f64,
        target_gap: f64,
    },

    #[error("incomplete sweep group: {0}")]
    IncompleteSweep(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures to read or decode input files, as opposed to
    /// domain-level violations.
    pub fn is_io_or_parse(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse(_))
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
