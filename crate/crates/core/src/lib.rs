//! Adaptive importance sampling for Monte Carlo pricing.
//!
//! The parameter of an importance sampling change of measure is learned online
//! by a Robbins-Monro recursion that is randomly truncated onto an increasing
//! sequence of balls, while the same draws feed the price estimator.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod market;
pub mod models;
pub mod normal;
pub mod rng;
pub mod sa;

pub use error::{Error, Result};
pub use estimator::{
    adis_run, crude_run, nadis_run, AdaptiveAccumulator, AdisVariant, ConfidenceInterval, EstimateReport, EveryK,
    NoTrace, SaSettings, ThetaSource, TraceRecord, TraceSink,
};
pub use market::{bs_call_price, MarketModel, Payoff};
pub use models::{
    DriftMatrix, EsscherFamily, EsscherModel, ExponentialFamily, GaussianFamily, GaussianShiftModel, GradientKind,
    ParametricRepresentation, PayoffFn,
};
pub use rng::NoiseStream;
pub use sa::{AverageNormalization, CompactSchedule, GainSchedule, StepOutcome, TruncatedSaState, WindowAverager};
