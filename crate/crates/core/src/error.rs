use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A gradient sample contained NaN. Overflowed (infinite) samples are not
    /// errors; the truncation step rejects them like any other escaping candidate.
    #[error("gradient sample is NaN at component {component}")]
    NonFiniteGradient { component: usize },

    #[error("rejected non-finite sample {value}")]
    NonFiniteSample { value: f64 },

    #[error("payoff returned non-finite value {value}")]
    NonFinitePayoff { value: f64 },

    #[error("accumulator holds no samples")]
    EmptyAccumulator,

    #[error("averaging window [{start}, {end}] needs iterate {missing}, history holds [{held_from}, {held_to}]")]
    InsufficientHistory {
        start: u64,
        end: u64,
        missing: u64,
        held_from: u64,
        held_to: u64,
    },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("correlation {rho} is outside ({lower}, 1) for {assets} assets")]
    NotPositiveDefinite { rho: f64, lower: f64, assets: usize },

    #[error("drift matrix does not have full column rank")]
    RankDeficient,

    #[error("theta {theta:?} is outside the cumulant domain")]
    OutsideCumulantDomain { theta: Vec<f64> },

    #[error("unsupported dimension {got}, the oracle needs 1")]
    UnsupportedDimension { got: usize },

    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },

    #[error("{context}: {source}")]
    InRun {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Stable machine-readable identifier of the innermost error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFiniteGradient { .. } => "non_finite_gradient",
            Error::NonFiniteSample { .. } => "non_finite_sample",
            Error::NonFinitePayoff { .. } => "non_finite_payoff",
            Error::EmptyAccumulator => "empty_accumulator",
            Error::InsufficientHistory { .. } => "insufficient_history",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::RankDeficient => "rank_deficient",
            Error::OutsideCumulantDomain { .. } => "outside_cumulant_domain",
            Error::UnsupportedDimension { .. } => "unsupported_dimension",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Io { .. } => "io",
            Error::AtIteration { source, .. } | Error::InRun { source, .. } => source.code(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            reason: err.to_string(),
        }
    }

    pub(crate) fn at(self, iteration: u64) -> Self {
        Error::AtIteration {
            iteration,
            source: Box::new(self),
        }
    }
}
