//! Online adaptive Monte Carlo estimator and the runners that couple it with
//! the truncated stochastic approximation.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::ParametricRepresentation;
use crate::normal::norm_inv_cdf;
use crate::rng::NoiseStream;
use crate::sa::{norm, AverageNormalization, CompactSchedule, GainSchedule, TruncatedSaState, WindowAverager};

/// Running mean of `H` and of `H^2`, updated with the recursion
/// `xi_{i+1} = i/(i+1) xi_i + H/(i+1)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AdaptiveAccumulator {
    n: u64,
    xi: f64,
    m2: f64,
    payoff_evals: u64,
}

impl AdaptiveAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.xi
    }

    pub fn second_moment(&self) -> f64 {
        self.m2
    }

    pub fn payoff_evals(&self) -> u64 {
        self.payoff_evals
    }

    pub fn set_payoff_evals(&mut self, evals: u64) {
        self.payoff_evals = evals;
    }

    pub fn update(&mut self, h: f64) -> Result<()> {
        if !h.is_finite() {
            return Err(Error::NonFiniteSample { value: h });
        }
        let i = self.n as f64;
        let w = 1.0 / (i + 1.0);
        self.xi = i * w * self.xi + w * h;
        self.m2 = i * w * self.m2 + w * (h * h);
        self.n += 1;
        Ok(())
    }

    /// `sigma_n^2 = m2 - xi^2`; can be slightly negative for small `n`.
    pub fn variance(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::EmptyAccumulator);
        }
        Ok(self.m2 - self.xi * self.xi)
    }

    pub fn confidence_interval(&self, level: f64) -> Result<ConfidenceInterval> {
        let z = normal_quantile_for_level(level)?;
        let var = self.variance()?;
        if var <= 0.0 {
            return Ok(ConfidenceInterval {
                low: self.xi,
                high: self.xi,
                degenerate: true,
            });
        }
        let half = z * (var / self.n as f64).sqrt();
        Ok(ConfidenceInterval {
            low: self.xi - half,
            high: self.xi + half,
            degenerate: false,
        })
    }
}

/// Two-sided quantile `z` with `P(|N(0,1)| <= z) = level`.
pub fn normal_quantile_for_level(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level", format!("must lie in (0, 1), got {level}")));
    }
    Ok(norm_inv_cdf(0.5 * (1.0 + level)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    /// Set when the variance estimate was not positive and the interval collapsed.
    pub degenerate: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub estimate: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub degenerate_ci: bool,
    pub level: f64,
    pub n: u64,
    pub payoff_evals: u64,
    /// Final truncation count `alpha_n` (0 when no stochastic approximation ran).
    pub truncations: u64,
    /// Last raw iterate `theta_n`.
    pub theta_final: Vec<f64>,
    /// Last averaged iterate, for the averaging variants.
    pub theta_averaged: Option<Vec<f64>>,
}

impl EstimateReport {
    fn from_accumulator(
        acc: &AdaptiveAccumulator,
        level: f64,
        truncations: u64,
        theta_final: Vec<f64>,
        theta_averaged: Option<Vec<f64>>,
    ) -> Result<Self> {
        let ci = acc.confidence_interval(level)?;
        Ok(Self {
            estimate: acc.mean(),
            variance: acc.variance()?,
            ci_low: ci.low,
            ci_high: ci.high,
            degenerate_ci: ci.degenerate,
            level,
            n: acc.n(),
            payoff_evals: acc.payoff_evals(),
            truncations,
            theta_final,
            theta_averaged,
        })
    }

    /// Standard error `sqrt(max(sigma^2, 0) / n)`.
    pub fn std_error(&self) -> f64 {
        (self.variance.max(0.0) / self.n as f64).sqrt()
    }

    pub fn ci(&self) -> ConfidenceInterval {
        ConfidenceInterval {
            low: self.ci_low,
            high: self.ci_high,
            degenerate: self.degenerate_ci,
        }
    }
}

/// Per-iteration record `(i, xi_i, sigma2_i, |theta|, alpha, payoff_evals)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    pub xi: f64,
    pub sigma2: f64,
    pub theta_norm: f64,
    pub alpha: u64,
    pub payoff_evals: u64,
}

pub trait TraceSink {
    /// Whether iteration `i` of `n` should be recorded.
    fn wants(&self, _i: u64, _n: u64) -> bool {
        true
    }

    fn record(&mut self, rec: TraceRecord);
}

/// Discards everything.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn wants(&self, _i: u64, _n: u64) -> bool {
        false
    }

    fn record(&mut self, _rec: TraceRecord) {}
}

/// Keeps every `every`-th record plus the last one, i.e. `ceil(n / every)` rows.
#[derive(Debug, Clone, Default)]
pub struct EveryK {
    every: u64,
    pub records: Vec<TraceRecord>,
}

impl EveryK {
    pub fn new(every: u64) -> Self {
        Self {
            every: every.max(1),
            records: Vec::new(),
        }
    }
}

impl TraceSink for EveryK {
    fn wants(&self, i: u64, n: u64) -> bool {
        i.is_multiple_of(self.every) || i == n
    }

    fn record(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }
}

/// Which iterate feeds `H` in the adaptive estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThetaSource {
    #[default]
    Raw,
    Averaged,
}

/// Stochastic approximation settings shared by the runners.
#[derive(Debug, Clone, PartialEq)]
pub struct SaSettings {
    pub gains: GainSchedule,
    pub compacts: CompactSchedule,
    pub theta0: Vec<f64>,
    /// Averaging window length.
    pub tau: f64,
    pub normalization: AverageNormalization,
    pub level: f64,
}

impl SaSettings {
    pub fn new(gains: GainSchedule, dim: usize) -> Self {
        Self {
            gains,
            compacts: CompactSchedule::default(),
            theta0: vec![0.0; dim],
            tau: 1.0,
            normalization: AverageNormalization::Verbatim,
            level: 0.95,
        }
    }
}

/// The adaptive estimator variants. `Xi1*` drive the iterate with `U1`,
/// `Xi2*` with `U2`; the gradient is selected by the representation passed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdisVariant {
    Xi1,
    Xi2,
    Xi1Avg,
    Xi2Avg,
}

impl AdisVariant {
    pub fn theta_source(self) -> ThetaSource {
        match self {
            AdisVariant::Xi1 | AdisVariant::Xi2 => ThetaSource::Raw,
            AdisVariant::Xi1Avg | AdisVariant::Xi2Avg => ThetaSource::Averaged,
        }
    }

    pub fn gradient(self) -> crate::models::GradientKind {
        match self {
            AdisVariant::Xi1 | AdisVariant::Xi1Avg => crate::models::GradientKind::U1,
            AdisVariant::Xi2 | AdisVariant::Xi2Avg => crate::models::GradientKind::U2,
        }
    }
}

impl FromStr for AdisVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "xi1" => Ok(Self::Xi1),
            "xi2" => Ok(Self::Xi2),
            "xi1_avg" | "xi1avg" => Ok(Self::Xi1Avg),
            "xi2_avg" | "xi2avg" => Ok(Self::Xi2Avg),
            other => Err(format!("unknown adaptive variant `{other}`")),
        }
    }
}

fn check_dims(rep: &dyn ParametricRepresentation, sa: &SaSettings, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    if sa.theta0.len() != rep.param_dim() {
        return Err(Error::DimensionMismatch {
            what: "theta0",
            expected: rep.param_dim(),
            got: sa.theta0.len(),
        });
    }
    normal_quantile_for_level(sa.level)?;
    Ok(())
}

/// Adaptive importance sampling: one sample `X_i` per iteration feeds both
/// `H(theta~_{i-1}, X_i)` and the update `theta_i = T(theta_{i-1} - gain U(theta_{i-1}, X_i))`.
///
/// With raw iterates, `H` and `U` are requested together so a representation
/// that shares the payoff evaluation (the `U2` form) costs one call per step.
pub fn adis_run(
    rep: &dyn ParametricRepresentation,
    sa: &SaSettings,
    source: ThetaSource,
    n: u64,
    stream: &mut NoiseStream,
    trace: &mut dyn TraceSink,
) -> Result<EstimateReport> {
    check_dims(rep, sa, n)?;
    let mut state = TruncatedSaState::new(sa.theta0.clone(), &sa.compacts)?;
    let mut averager = match source {
        ThetaSource::Raw => None,
        ThetaSource::Averaged => Some(WindowAverager::new(sa.gains, sa.tau, sa.normalization, &sa.theta0)?),
    };
    let evals0 = rep.payoff_evals();
    let mut acc = AdaptiveAccumulator::new();
    let mut x = vec![0.0; rep.sample_dim()];
    let mut u = vec![0.0; rep.param_dim()];

    for i in 1..=n {
        rep.draw(stream, &mut x);
        let h = match &averager {
            None => rep.h_and_u(state.theta(), &x, &mut u),
            Some(avg) => rep
                .h(avg.current(), &x)
                .and_then(|h| rep.u(state.theta(), &x, &mut u).map(|_| h)),
        }
        .map_err(|e| e.at(i))?;
        acc.update(h).map_err(|e| e.at(i))?;
        state.step(&sa.gains, &sa.compacts, &u).map_err(|e| e.at(i))?;
        if let Some(avg) = averager.as_mut() {
            avg.push(i, state.theta()).map_err(|e| e.at(i))?;
        }
        acc.set_payoff_evals(rep.payoff_evals() - evals0);
        if trace.wants(i, n) {
            trace.record(TraceRecord {
                iter: i,
                xi: acc.mean(),
                sigma2: acc.variance()?,
                theta_norm: norm(state.theta()),
                alpha: state.alpha(),
                payoff_evals: acc.payoff_evals(),
            });
        }
    }
    EstimateReport::from_accumulator(
        &acc,
        sa.level,
        state.alpha(),
        state.theta().to_vec(),
        averager.map(|a| a.current().to_vec()),
    )
}

/// Crude Monte Carlo: `H(theta0, X_i)` with the parameter never updated.
pub fn crude_run(
    rep: &dyn ParametricRepresentation,
    theta: &[f64],
    level: f64,
    n: u64,
    stream: &mut NoiseStream,
    trace: &mut dyn TraceSink,
) -> Result<EstimateReport> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    normal_quantile_for_level(level)?;
    let evals0 = rep.payoff_evals();
    let mut acc = AdaptiveAccumulator::new();
    let mut x = vec![0.0; rep.sample_dim()];
    let theta_norm = norm(theta);
    for i in 1..=n {
        rep.draw(stream, &mut x);
        let h = rep.h(theta, &x).map_err(|e| e.at(i))?;
        acc.update(h).map_err(|e| e.at(i))?;
        acc.set_payoff_evals(rep.payoff_evals() - evals0);
        if trace.wants(i, n) {
            trace.record(TraceRecord {
                iter: i,
                xi: acc.mean(),
                sigma2: acc.variance()?,
                theta_norm,
                alpha: 0,
                payoff_evals: acc.payoff_evals(),
            });
        }
    }
    EstimateReport::from_accumulator(&acc, level, 0, theta.to_vec(), None)
}

/// Two-phase (non-adaptive) importance sampling: `n` stochastic approximation
/// steps on `X_1..X_n`, then plain Monte Carlo of `H(theta_n, X'_i)` on `n`
/// fresh samples drawn from `stream.fresh()`. The trace covers the second phase.
pub fn nadis_run(
    rep: &dyn ParametricRepresentation,
    sa: &SaSettings,
    plug_in: ThetaSource,
    n: u64,
    stream: &mut NoiseStream,
    trace: &mut dyn TraceSink,
) -> Result<EstimateReport> {
    check_dims(rep, sa, n)?;
    let mut state = TruncatedSaState::new(sa.theta0.clone(), &sa.compacts)?;
    let mut averager = match plug_in {
        ThetaSource::Raw => None,
        ThetaSource::Averaged => Some(WindowAverager::new(sa.gains, sa.tau, sa.normalization, &sa.theta0)?),
    };
    let evals0 = rep.payoff_evals();
    let mut fresh = stream.fresh();
    let mut x = vec![0.0; rep.sample_dim()];
    let mut u = vec![0.0; rep.param_dim()];
    for i in 1..=n {
        rep.draw(stream, &mut x);
        rep.u(state.theta(), &x, &mut u).map_err(|e| e.at(i))?;
        state.step(&sa.gains, &sa.compacts, &u).map_err(|e| e.at(i))?;
        if let Some(avg) = averager.as_mut() {
            avg.push(i, state.theta()).map_err(|e| e.at(i))?;
        }
    }
    let theta = match &averager {
        None => state.theta().to_vec(),
        Some(avg) => avg.current().to_vec(),
    };
    let theta_norm = norm(&theta);
    let mut acc = AdaptiveAccumulator::new();
    for i in 1..=n {
        rep.draw(&mut fresh, &mut x);
        let h = rep.h(&theta, &x).map_err(|e| e.at(n + i))?;
        acc.update(h).map_err(|e| e.at(n + i))?;
        acc.set_payoff_evals(rep.payoff_evals() - evals0);
        if trace.wants(i, n) {
            trace.record(TraceRecord {
                iter: i,
                xi: acc.mean(),
                sigma2: acc.variance()?,
                theta_norm,
                alpha: state.alpha(),
                payoff_evals: acc.payoff_evals(),
            });
        }
    }
    EstimateReport::from_accumulator(
        &acc,
        sa.level,
        state.alpha(),
        state.theta().to_vec(),
        averager.map(|_| theta),
    )
}
