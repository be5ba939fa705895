//! Randomly truncated Robbins-Monro iteration with moving-window averaging.
//!
//! The iteration drives `theta` towards the root of `E[U(theta, X)]`:
//!
//! ```text
//! candidate = theta_n - gain(n + 1) * U(theta_n, X_{n+1})
//! if candidate lies in K_{alpha_n}:  theta_{n+1} = candidate
//! else:                              theta_{n+1} = theta_0, alpha_{n+1} = alpha_n + 1
//! ```
//!
//! `K_j` are centred Euclidean balls of radius `r0 * growth^j`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Step sequence `gain(n) = gamma / (n + 1)^a`.
///
/// `gamma = 0` is accepted and freezes the iterate at its starting point,
/// which turns the adaptive estimator into plain Monte Carlo at `theta_0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSchedule {
    gamma: f64,
    a: f64,
}

impl GainSchedule {
    pub const DEFAULT_EXPONENT: f64 = 0.75;

    pub fn new(gamma: f64, a: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::invalid("gamma", format!("must be finite and >= 0, got {gamma}")));
        }
        if !(a > 0.5 && a <= 1.0) {
            return Err(Error::invalid("a", format!("must lie in (1/2, 1], got {a}")));
        }
        Ok(Self { gamma, a })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn exponent(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn gain_at(&self, n: u64) -> f64 {
        self.gamma / ((n + 1) as f64).powf(self.a)
    }
}

/// Increasing family of centred balls `K_j = { |x| <= r0 * growth^j }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactSchedule {
    r0: f64,
    growth: f64,
}

impl Default for CompactSchedule {
    fn default() -> Self {
        Self { r0: 5.0, growth: 2.0 }
    }
}

impl CompactSchedule {
    pub fn new(r0: f64, growth: f64) -> Result<Self> {
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::invalid("r0", format!("must be finite and > 0, got {r0}")));
        }
        if !(growth.is_finite() && growth > 1.0) {
            return Err(Error::invalid(
                "growth",
                format!("must be finite and > 1, got {growth}"),
            ));
        }
        Ok(Self { r0, growth })
    }

    pub fn radius(&self, j: u64) -> f64 {
        self.r0 * self.growth.powf(j as f64)
    }

    pub fn contains(&self, j: u64, theta: &[f64]) -> bool {
        norm(theta) <= self.radius(j)
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Truncated,
}

/// Per-step record emitted for tracing: `(n, |theta_n|, alpha_n, gain_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaTraceRecord {
    pub n: u64,
    pub theta_norm: f64,
    pub alpha: u64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSaState {
    theta: Vec<f64>,
    alpha: u64,
    n: u64,
    theta0: Vec<f64>,
    candidate: Vec<f64>,
}

impl TruncatedSaState {
    /// Starts at `theta0`, which must lie in `K_0`.
    pub fn new(theta0: Vec<f64>, compacts: &CompactSchedule) -> Result<Self> {
        if theta0.is_empty() {
            return Err(Error::invalid("theta0", "dimension must be at least 1"));
        }
        if !compacts.contains(0, &theta0) {
            return Err(Error::invalid(
                "theta0",
                format!(
                    "|theta0| = {} lies outside K_0 (radius {})",
                    norm(&theta0),
                    compacts.radius(0)
                ),
            ));
        }
        let d = theta0.len();
        Ok(Self {
            theta: theta0.clone(),
            alpha: 0,
            n: 0,
            theta0,
            candidate: vec![0.0; d],
        })
    }

    pub fn at_origin(dim: usize, compacts: &CompactSchedule) -> Result<Self> {
        Self::new(vec![0.0; dim], compacts)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// One truncated step with gradient sample `u` evaluated at the current iterate.
    ///
    /// NaN entries are rejected. Infinite entries (an overflowed sample) make
    /// the candidate non-finite, so it cannot lie in any compact and the step
    /// truncates.
    pub fn step(&mut self, gains: &GainSchedule, compacts: &CompactSchedule, u: &[f64]) -> Result<StepOutcome> {
        if u.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                what: "gradient sample",
                expected: self.theta.len(),
                got: u.len(),
            });
        }
        if let Some(component) = u.iter().position(|v| v.is_nan()) {
            return Err(Error::NonFiniteGradient { component });
        }
        let gain = gains.gain_at(self.n + 1);
        for ((c, t), g) in self.candidate.iter_mut().zip(&self.theta).zip(u) {
            // A zero gain freezes theta even when the sample overflowed.
            *c = if gain == 0.0 { *t } else { t - gain * g };
        }
        self.n += 1;
        if compacts.contains(self.alpha, &self.candidate) {
            std::mem::swap(&mut self.theta, &mut self.candidate);
            Ok(StepOutcome::Accepted)
        } else {
            self.theta.copy_from_slice(&self.theta0);
            self.alpha += 1;
            Ok(StepOutcome::Truncated)
        }
    }

    pub fn trace_record(&self, gains: &GainSchedule) -> SaTraceRecord {
        SaTraceRecord {
            n: self.n,
            theta_norm: norm(&self.theta),
            alpha: self.alpha,
            gain: gains.gain_at(self.n),
        }
    }
}

/// `p = sup{k >= 1 : k + tau / gain(k) <= n} ∧ n`, with `sup ∅ = +∞`.
pub fn window_start(gains: &GainSchedule, tau: f64, n: u64) -> u64 {
    window_start_checked(gains, tau, n).0
}

/// Returns the window start and whether some `k` satisfied the defining
/// inequality. Once it does, the start is nondecreasing in `n`.
fn window_start_checked(gains: &GainSchedule, tau: f64, n: u64) -> (u64, bool) {
    debug_assert!(n >= 1);
    let fits = |k: u64| k as f64 + tau / gains.gain_at(k) <= n as f64;
    if !fits(1) {
        return (n, false);
    }
    // k + tau / gain(k) is increasing in k.
    let (mut lo, mut hi) = (1u64, n);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    (lo, true)
}

/// Inclusive window `[p, min(p + floor(tau / gain(p)), n)]`.
pub fn window_bounds(gains: &GainSchedule, tau: f64, n: u64) -> (u64, u64) {
    let p = window_start(gains, tau, n);
    (p, window_end(gains, tau, p, n))
}

fn window_end(gains: &GainSchedule, tau: f64, p: u64, n: u64) -> u64 {
    let span = (tau / gains.gain_at(p)).floor();
    if span >= (n - p) as f64 {
        n
    } else {
        p + span as u64
    }
}

/// Normalization of the window sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AverageNormalization {
    /// Weight `gain(p) / tau` on every term.
    #[default]
    Verbatim,
    /// Arithmetic mean over the window.
    Count,
}

impl AverageNormalization {
    fn weight(self, gains: &GainSchedule, tau: f64, start: u64, end: u64) -> f64 {
        match self {
            AverageNormalization::Verbatim => gains.gain_at(start) / tau,
            AverageNormalization::Count => 1.0 / (end - start + 1) as f64,
        }
    }
}

impl std::str::FromStr for AverageNormalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "verbatim" => Ok(Self::Verbatim),
            "count" => Ok(Self::Count),
            other => Err(format!("expected `verbatim` or `count`, got `{other}`")),
        }
    }
}

/// Past iterates `theta_i` for a contiguous index range, stored flat.
#[derive(Debug, Clone)]
pub struct IterateHistory {
    dim: usize,
    first: u64,
    data: VecDeque<f64>,
}

impl IterateHistory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            first: 1,
            data: VecDeque::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Index of the oldest stored iterate.
    pub fn first_index(&self) -> u64 {
        self.first
    }

    /// Index of the newest stored iterate, if any.
    pub fn last_index(&self) -> Option<u64> {
        (!self.is_empty()).then(|| self.first + self.len() as u64 - 1)
    }

    /// Appends `theta_index`; indices must be consecutive.
    pub fn push(&mut self, index: u64, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "iterate",
                expected: self.dim,
                got: theta.len(),
            });
        }
        match self.last_index() {
            None => self.first = index,
            Some(last) if last + 1 == index => {}
            Some(last) => {
                return Err(Error::invalid(
                    "index",
                    format!("iterates must be consecutive, expected {} got {index}", last + 1),
                ))
            }
        }
        self.data.extend(theta.iter().copied());
        Ok(())
    }

    pub fn get(&self, index: u64) -> Option<impl Iterator<Item = f64> + '_> {
        let last = self.last_index()?;
        if index < self.first || index > last {
            return None;
        }
        let off = (index - self.first) as usize * self.dim;
        Some(self.data.range(off..off + self.dim).copied())
    }

    /// Drops every iterate with index below `index`.
    pub fn discard_before(&mut self, index: u64) {
        if index <= self.first {
            return;
        }
        let count = ((index - self.first) as usize).min(self.len());
        self.data.drain(..count * self.dim);
        self.first += count as u64;
    }

    fn check_range(&self, start: u64, end: u64) -> Result<()> {
        let held_to = self.last_index().unwrap_or(0);
        let missing = if self.is_empty() || start < self.first {
            Some(start)
        } else if end > held_to {
            Some(held_to + 1)
        } else {
            None
        };
        match missing {
            Some(missing) => Err(Error::InsufficientHistory {
                start,
                end,
                missing,
                held_from: self.first,
                held_to,
            }),
            None => Ok(()),
        }
    }

    fn sum_range(&self, start: u64, end: u64, out: &mut [f64]) {
        out.fill(0.0);
        for i in start..=end {
            for (o, v) in out.iter_mut().zip(self.get(i).expect("range checked")) {
                *o += v;
            }
        }
    }

    /// Moving-window average `theta_hat_n(tau)` computed from scratch.
    pub fn averaged_iterate(
        &self,
        gains: &GainSchedule,
        tau: f64,
        n: u64,
        mode: AverageNormalization,
    ) -> Result<Vec<f64>> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be finite and > 0, got {tau}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "averaging needs n >= 1"));
        }
        let (start, end) = window_bounds(gains, tau, n);
        self.check_range(start, end)?;
        let mut out = vec![0.0; self.dim];
        self.sum_range(start, end, &mut out);
        let w = mode.weight(gains, tau, start, end);
        out.iter_mut().for_each(|v| *v *= w);
        Ok(out)
    }
}

/// Incremental form of [`IterateHistory::averaged_iterate`] for use inside a run.
///
/// Keeps a running sum over the current window and slides it forward, and
/// drops iterates that can no longer enter a window.
#[derive(Debug, Clone)]
pub struct WindowAverager {
    gains: GainSchedule,
    tau: f64,
    mode: AverageNormalization,
    history: IterateHistory,
    window: Option<(u64, u64)>,
    sum: Vec<f64>,
    current: Vec<f64>,
}

impl WindowAverager {
    pub fn new(gains: GainSchedule, tau: f64, mode: AverageNormalization, theta0: &[f64]) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("must be finite and > 0, got {tau}")));
        }
        let dim = theta0.len();
        Ok(Self {
            gains,
            tau,
            mode,
            history: IterateHistory::new(dim),
            window: None,
            sum: vec![0.0; dim],
            current: theta0.to_vec(),
        })
    }

    /// Latest average; equals `theta0` before the first push.
    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn history(&self) -> &IterateHistory {
        &self.history
    }

    /// Records `theta_n` and returns `theta_hat_n`.
    pub fn push(&mut self, n: u64, theta: &[f64]) -> Result<&[f64]> {
        self.history.push(n, theta)?;
        let (start, qualified) = window_start_checked(&self.gains, self.tau, n);
        let end = window_end(&self.gains, self.tau, start, n);
        match self.window {
            Some((lo, hi)) if start >= lo && end >= hi && start <= hi + 1 => {
                for i in lo..start {
                    for (s, v) in self.sum.iter_mut().zip(self.history.get(i).expect("held")) {
                        *s -= v;
                    }
                }
                for i in (hi + 1).max(start)..=end {
                    for (s, v) in self.sum.iter_mut().zip(self.history.get(i).expect("held")) {
                        *s += v;
                    }
                }
            }
            _ => {
                self.history.check_range(start, end)?;
                self.history.sum_range(start, end, &mut self.sum);
            }
        }
        self.window = Some((start, end));
        if qualified {
            self.history.discard_before(start);
        }
        let w = self.mode.weight(&self.gains, self.tau, start, end);
        for (c, s) in self.current.iter_mut().zip(&self.sum) {
            *c = w * s;
        }
        Ok(&self.current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gs(gamma: f64, a: f64) -> GainSchedule {
        GainSchedule::new(gamma, a).unwrap()
    }

    #[test]
    fn gain_examples() {
        assert_eq!(gs(1.0, 1.0).gain_at(0), 1.0);
        assert_eq!(gs(1.0, 0.75).gain_at(0), 1.0);
        assert!((gs(0.5, 0.75).gain_at(3) - 0.176_776_695).abs() < 1e-8);
    }

    #[test]
    fn gain_rejects_bad_parameters() {
        assert!(GainSchedule::new(-1.0, 0.75).is_err());
        assert!(GainSchedule::new(1.0, 0.5).is_err());
        assert!(GainSchedule::new(1.0, 1.1).is_err());
        assert!(GainSchedule::new(f64::NAN, 0.75).is_err());
    }

    #[test]
    fn gain_strictly_decreasing() {
        let g = gs(2.0, 0.6);
        for n in 0..10_000 {
            assert!(g.gain_at(n + 1) < g.gain_at(n));
        }
    }

    #[test]
    fn contains_examples() {
        let cs = CompactSchedule::new(1.0, 2.0).unwrap();
        assert!(cs.contains(0, &[0.0, 0.0]));
        assert!(cs.contains(1, &[1.5]));
        assert!(!cs.contains(0, &[1.5]));
        assert!(cs.contains(1, &[0.9, 1.2]));
        assert!(!cs.contains(0, &[f64::INFINITY]));
    }

    #[test]
    fn step_with_zero_gradient_keeps_theta() {
        let cs = CompactSchedule::default();
        let mut st = TruncatedSaState::new(vec![0.3, -0.2], &cs).unwrap();
        let out = st.step(&gs(1.0, 0.75), &cs, &[0.0, 0.0]).unwrap();
        assert_eq!(out, StepOutcome::Accepted);
        assert_eq!(st.theta(), &[0.3, -0.2]);
        assert_eq!((st.alpha(), st.n()), (0, 1));
    }

    // gain(n + 1) = 1 with gamma = 2^0.75, a = 0.75, n = 0.
    fn unit_gain() -> GainSchedule {
        gs(2f64.powf(0.75), 0.75)
    }

    #[test]
    fn step_truncates_outside_compact() {
        let cs = CompactSchedule::new(5.0, 2.0).unwrap();
        let g = unit_gain();
        assert!((g.gain_at(1) - 1.0).abs() < 1e-15);
        let mut st = TruncatedSaState::at_origin(1, &cs).unwrap();
        assert_eq!(st.step(&g, &cs, &[10.0]).unwrap(), StepOutcome::Truncated);
        assert_eq!(st.theta(), &[0.0]);
        assert_eq!(st.alpha(), 1);
    }

    #[test]
    fn step_accepts_inside_compact() {
        let cs = CompactSchedule::new(5.0, 2.0).unwrap();
        let mut st = TruncatedSaState::at_origin(1, &cs).unwrap();
        assert_eq!(st.step(&unit_gain(), &cs, &[0.5]).unwrap(), StepOutcome::Accepted);
        assert!((st.theta()[0] + 0.5).abs() < 1e-15);
        assert_eq!(st.alpha(), 0);
    }

    #[test]
    fn step_rejects_nan_and_truncates_on_overflow() {
        let cs = CompactSchedule::default();
        let g = gs(1.0, 0.75);
        let mut st = TruncatedSaState::at_origin(2, &cs).unwrap();
        assert_eq!(
            st.step(&g, &cs, &[0.0, f64::NAN]),
            Err(Error::NonFiniteGradient { component: 1 })
        );
        assert_eq!(st.n(), 0);
        assert_eq!(st.step(&g, &cs, &[f64::INFINITY, 0.0]).unwrap(), StepOutcome::Truncated);
        assert_eq!(st.alpha(), 1);
        assert!(st.step(&g, &cs, &[1.0]).is_err());
    }

    #[test]
    fn theta0_must_lie_in_first_compact() {
        let cs = CompactSchedule::new(1.0, 2.0).unwrap();
        assert!(TruncatedSaState::new(vec![2.0], &cs).is_err());
        assert!(TruncatedSaState::new(vec![], &cs).is_err());
    }

    #[test]
    fn window_start_examples() {
        let g = gs(1.0, 0.75);
        assert_eq!(window_start(&g, 1.0, 1), 1);
        assert_eq!(window_start(&g, 1.0, 100), 74);
        assert_eq!(window_start(&g, 0.0, 10), 10);
    }

    #[test]
    fn window_start_matches_scan() {
        let g = gs(0.3, 0.8);
        for &tau in &[0.0, 0.5, 1.0, 3.0] {
            for n in 1..400u64 {
                let scan = (1..=n)
                    .filter(|&k| k as f64 + tau / g.gain_at(k) <= n as f64)
                    .max()
                    .unwrap_or(n)
                    .min(n);
                assert_eq!(window_start(&g, tau, n), scan, "tau={tau} n={n}");
            }
        }
    }

    #[test]
    fn window_start_monotone_once_qualified() {
        let g = gs(1.0, 0.75);
        let tau = 1.0;
        let mut prev = None;
        for n in 1..5_000 {
            let (p, q) = window_start_checked(&g, tau, n);
            if q {
                if let Some(prev) = prev {
                    assert!(p >= prev);
                }
                prev = Some(p);
            }
        }
        // Before any k qualifies the start equals n, so it drops once at the switch.
        assert_eq!(window_start(&g, tau, 2), 2);
        assert_eq!(window_start(&g, tau, 3), 1);
    }

    fn history_of(values: &[(u64, f64)]) -> IterateHistory {
        let mut h = IterateHistory::new(1);
        for &(i, v) in values {
            h.push(i, &[v]).unwrap();
        }
        h
    }

    #[test]
    fn averaged_constant_sequence() {
        // gain(p) = 0.25 exactly: gamma = 0.25 * (p+1)^a; choose a = 1, p = 1 -> gamma = 0.5.
        // With tau = 1 the start for n = 6 is p = 1 (1 + 4 <= 6, 2 + 6 > 6), window [1, 5].
        let g = gs(0.5, 1.0);
        assert_eq!(window_bounds(&g, 1.0, 6), (1, 5));
        let h = history_of(&(1..=6).map(|i| (i, 2.0)).collect::<Vec<_>>());
        let verb = h.averaged_iterate(&g, 1.0, 6, AverageNormalization::Verbatim).unwrap();
        let count = h.averaged_iterate(&g, 1.0, 6, AverageNormalization::Count).unwrap();
        assert!((verb[0] - 1.25 * 2.0).abs() < 1e-15);
        assert!((count[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn averaged_zero_sequence() {
        let g = gs(1.0, 0.75);
        let h = history_of(&(1..=50).map(|i| (i, 0.0)).collect::<Vec<_>>());
        for mode in [AverageNormalization::Verbatim, AverageNormalization::Count] {
            assert_eq!(h.averaged_iterate(&g, 1.0, 50, mode).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn averaged_single_point_window() {
        let g = gs(1.0, 0.75);
        let h = history_of(&[(1, 3.0), (2, 4.0)]);
        assert_eq!(window_bounds(&g, 1.0, 2), (2, 2));
        let verb = h.averaged_iterate(&g, 1.0, 2, AverageNormalization::Verbatim).unwrap();
        let count = h.averaged_iterate(&g, 1.0, 2, AverageNormalization::Count).unwrap();
        assert!((verb[0] - g.gain_at(2) * 4.0).abs() < 1e-15);
        assert_eq!(count[0], 4.0);
    }

    #[test]
    fn averaged_reports_missing_history() {
        let g = gs(1.0, 0.75);
        let mut h = history_of(&(1..=100).map(|i| (i, 1.0)).collect::<Vec<_>>());
        h.discard_before(80);
        let err = h
            .averaged_iterate(&g, 1.0, 100, AverageNormalization::Count)
            .unwrap_err();
        assert!(
            matches!(
                err,
                Error::InsufficientHistory {
                    start: 74,
                    missing: 74,
                    ..
                }
            ),
            "{err:?}"
        );
        let short = history_of(&[(1, 1.0)]);
        assert!(short.averaged_iterate(&g, 1.0, 3, AverageNormalization::Count).is_err());
    }

    #[test]
    fn averager_matches_direct_computation() {
        let g = gs(0.7, 0.75);
        let tau = 2.0;
        let mut full = IterateHistory::new(2);
        let mut avg = WindowAverager::new(g, tau, AverageNormalization::Verbatim, &[0.0, 0.0]).unwrap();
        for n in 1..3_000u64 {
            let theta = [(n as f64 * 0.37).sin(), 1.0 + (n % 7) as f64];
            full.push(n, &theta).unwrap();
            let inc = avg.push(n, &theta).unwrap().to_vec();
            let direct = full
                .averaged_iterate(&g, tau, n, AverageNormalization::Verbatim)
                .unwrap();
            for (a, b) in inc.iter().zip(&direct) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "n={n}: {a} vs {b}");
            }
        }
        // Retained history is bounded by the window, not by n.
        assert!(avg.history().len() < 2_000);
    }

    proptest! {
        #[test]
        fn step_keeps_iterate_in_active_compact(
            us in proptest::collection::vec(-50.0f64..50.0, 1..200),
            gamma in 0.0f64..5.0,
            r0 in 0.1f64..10.0,
        ) {
            let g = gs(gamma, 0.75);
            let cs = CompactSchedule::new(r0, 2.0).unwrap();
            let mut st = TruncatedSaState::at_origin(1, &cs).unwrap();
            for u in us {
                let before = st.alpha();
                st.step(&g, &cs, &[u]).unwrap();
                prop_assert!(norm(st.theta()) <= cs.radius(st.alpha()));
                prop_assert!(st.alpha() - before <= 1);
            }
        }

        #[test]
        fn trajectories_are_deterministic(us in proptest::collection::vec(-20.0f64..20.0, 1..100)) {
            let g = gs(1.0, 0.75);
            let cs = CompactSchedule::default();
            let run = || {
                let mut st = TruncatedSaState::at_origin(1, &cs).unwrap();
                us.iter().map(|&u| { st.step(&g, &cs, &[u]).unwrap(); (st.theta()[0].to_bits(), st.alpha()) }).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(), run());
        }
    }
}
