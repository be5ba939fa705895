//! Deterministic one-dimensional oracles for `v(theta)` and its minimizer.
//!
//! With `s = a theta` (`a` the 1x1 drift matrix), the second moment
//! `v(theta) = E[phi(G)^2 exp(-s G + s^2 / 2)]` is rewritten as
//! `exp(s^2) E[phi(G - s)^2]`, a plain Gaussian expectation. Smooth integrands
//! use a Gauss-Hermite rule; payoffs with kinks or jumps use a composite
//! Gauss-Legendre rule split at the breakpoints.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::market::{MarketModel, Payoff};
use crate::models::{GaussianShiftModel, PayoffFn};
use crate::normal::norm_pdf;

pub const HERMITE_NODES: usize = 200;

const LEGENDRE_NODES: usize = 20;
const PANEL_WIDTH: f64 = 0.25;
/// Integration range for the composite rule; the Gaussian tail beyond is below `e^-800`.
const HALF_RANGE: f64 = 40.0;

/// Nodes and weights of the `n`-point Gauss-Hermite rule for `E[f(G)]`,
/// `G ~ N(0, 1)`; the weights sum to one.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        // Newton polish on the orthonormal Hermite polynomial, then the
        // Christoffel weight `1 / sum_k p_k(x)^2`.
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_hermite(n, *x);
            if dp != 0.0 && dp.is_finite() {
                *x -= p / dp;
            }
        }
        let (_, _, sumsq) = orthonormal_hermite(n, *x);
        weights.push(1.0 / sumsq);
    }
    (nodes, weights)
}

/// `(p_n(x), p_n'(x), sum_{k<n} p_k(x)^2)` for the orthonormal probabilists' Hermite family.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    let mut sumsq = 0.0;
    for k in 0..n {
        sumsq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, (n as f64).sqrt() * prev, sumsq)
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `E[f(G)]` by composite Gauss-Legendre on `[-40, 40]`, with panel edges at
/// every breakpoint inside the range.
pub fn gaussian_expectation_piecewise(f: impl Fn(f64) -> f64, breakpoints: &[f64]) -> f64 {
    let (x, w) = gauss_legendre(LEGENDRE_NODES);
    let mut edges: Vec<f64> = breakpoints.iter().copied().filter(|b| b.abs() < HALF_RANGE).collect();
    edges.push(-HALF_RANGE);
    edges.push(HALF_RANGE);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut total = 0.0;
    for seg in edges.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let panels = ((hi - lo) / PANEL_WIDTH).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * h;
            let half = 0.5 * h;
            total += x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let y = mid + half * xi;
                    wi * f(y) * norm_pdf(y)
                })
                .sum::<f64>()
                * half;
        }
    }
    total
}

/// One-dimensional Gaussian-shift oracle.
#[derive(Clone)]
pub struct QuadratureOracle {
    phi: PayoffFn,
    /// Scalar drift `a`.
    scale: f64,
    /// Points where `phi` is not smooth; empty selects Gauss-Hermite.
    breakpoints: Vec<f64>,
    hermite: Option<(Vec<f64>, Vec<f64>)>,
}

impl std::fmt::Debug for QuadratureOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuadratureOracle")
            .field("scale", &self.scale)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl QuadratureOracle {
    pub fn new(phi: PayoffFn, scale: f64, breakpoints: Vec<f64>) -> Self {
        let hermite = breakpoints.is_empty().then(|| gauss_hermite(HERMITE_NODES));
        Self {
            phi,
            scale,
            breakpoints,
            hermite,
        }
    }

    /// Oracle for a model with a single Gaussian input and a scalar parameter.
    pub fn from_model(model: &GaussianShiftModel, breakpoints: Vec<f64>) -> Result<Self> {
        let dim = model.sample_dim().max(model.param_dim());
        if dim != 1 {
            return Err(Error::UnsupportedDimension { got: dim });
        }
        let mut a = [0.0];
        model.drift().apply(&[1.0], &mut a);
        Ok(Self::new(model.payoff_fn().clone(), a[0], breakpoints))
    }

    /// Oracle for a market payoff on one asset and one date, with the strike
    /// and barrier crossings of the Gaussian input as breakpoints.
    pub fn for_market(model: &GaussianShiftModel, market: &MarketModel, payoff: &Payoff) -> Result<Self> {
        Self::from_model(model, market_breakpoints(market, payoff)?)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `E[f(G)]` with the rule matching the payoff's smoothness; `kinks` are
    /// the breakpoints of `f`.
    fn expect(&self, f: impl Fn(f64) -> f64, kinks: &[f64]) -> f64 {
        match &self.hermite {
            Some((x, w)) => x.iter().zip(w).map(|(xi, wi)| wi * f(*xi)).sum(),
            None => gaussian_expectation_piecewise(f, kinks),
        }
    }

    /// `E[phi(G)]`.
    pub fn mean(&self) -> f64 {
        let phi = &self.phi;
        self.expect(|y| phi(&[y]), &self.breakpoints)
    }

    /// `v(theta) = E[phi(G)^2 exp(-a theta G + (a theta)^2 / 2)]`.
    pub fn v(&self, theta: f64) -> f64 {
        let s = self.scale * theta;
        let phi = &self.phi;
        let shifted: Vec<f64> = self.breakpoints.iter().map(|b| b + s).collect();
        let m = self.expect(
            |y| {
                let p = phi(&[y - s]);
                p * p
            },
            &shifted,
        );
        (s * s).exp() * m
    }

    /// Asymptotic variance `v(theta) - E[phi(G)]^2`.
    pub fn variance(&self, theta: f64) -> f64 {
        let m = self.mean();
        self.v(theta) - m * m
    }

    /// Central finite difference of `v` with step `h`.
    pub fn v_derivative(&self, theta: f64, h: f64) -> f64 {
        (self.v(theta + h) - self.v(theta - h)) / (2.0 * h)
    }

    /// Minimizer of the strictly convex `v` on `[-10, 10]` by golden-section search.
    pub fn theta_star(&self) -> f64 {
        golden_section(|t| self.v(t), -10.0, 10.0, 1e-6)
    }
}

/// Minimizer of a unimodal `f` on `[lo, hi]` to within `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Values of the Gaussian input where a one-asset, one-date payoff crosses
/// its strike or barrier.
pub fn market_breakpoints(market: &MarketModel, payoff: &Payoff) -> Result<Vec<f64>> {
    if market.assets() != 1 || market.dates() != 1 {
        return Err(Error::UnsupportedDimension {
            got: market.noise_dim().max(market.assets()),
        });
    }
    let (s, vol, t) = (market.spots()[0], market.vols()[0], market.maturity());
    let drift = (market.rate() - 0.5 * vol * vol) * t;
    let sd = vol * t.sqrt();
    let level_to_g = |level: f64| -> Option<f64> { (sd > 0.0 && level > 0.0).then(|| ((level / s).ln() - drift) / sd) };
    let w = payoff.weights()[0];
    let mut out = Vec::new();
    if w != 0.0 {
        out.extend(level_to_g(payoff.strike() / w));
    }
    if let Some(b) = payoff.barriers() {
        out.extend(level_to_g(b[0]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::bs_call_price;
    use crate::models::DriftMatrix;
    use std::sync::Arc;

    fn double_factorial(k: u32) -> f64 {
        (1..=k).rev().step_by(2).map(f64::from).product()
    }

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(HERMITE_NODES);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        for k in 1..=30u32 {
            let m: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(2 * k as i32)).sum();
            let exact = double_factorial(2 * k - 1);
            assert!(((m - exact) / exact).abs() < 1e-8, "k={k}: {m} vs {exact}");
            let odd: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(2 * k as i32 - 1)).sum();
            assert!(odd.abs() < 1e-8 * exact, "odd k={k}: {odd}");
        }
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(LEGENDRE_NODES);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for k in 0..20 {
            let m: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(2 * k)).sum();
            assert!((m - 2.0 / (2 * k + 1) as f64).abs() < 1e-14, "k={k}");
        }
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn piecewise_gaussian_expectation() {
        assert!((gaussian_expectation_piecewise(|_| 1.0, &[]) - 1.0).abs() < 1e-14);
        let e = gaussian_expectation_piecewise(|y| y.max(0.0), &[0.0]);
        assert!((e - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
        let tail = gaussian_expectation_piecewise(|y| if y > 1.5 { 1.0 } else { 0.0 }, &[1.5]);
        assert!((tail - crate::normal::norm_cdf(-1.5)).abs() < 1e-14);
    }

    fn constant(c: f64) -> QuadratureOracle {
        QuadratureOracle::new(Arc::new(move |_| c), 1.0, Vec::new())
    }

    #[test]
    fn unit_payoff_second_moment() {
        let o = constant(1.0);
        assert!((o.v(1.0) - std::f64::consts::E).abs() < 1e-12);
        for t in [-3.0, -0.5, 0.0, 2.0, 4.0] {
            let exact = f64::exp(t * t);
            assert!(((o.v(t) - exact) / exact).abs() < 1e-10, "theta={t}");
        }
        assert!(o.theta_star().abs() < 1e-6);
        assert!(constant(7.3).theta_star().abs() < 1e-6);
        let kinked = QuadratureOracle::new(Arc::new(|_| 1.0), 1.0, vec![0.3]);
        assert!((kinked.v(1.0) - std::f64::consts::E).abs() < 1e-12);
    }

    fn call() -> (GaussianShiftModel, Arc<MarketModel>, Payoff) {
        let market = Arc::new(MarketModel::new(vec![100.0], vec![0.2], 0.05, 0.0, vec![1.0]).unwrap());
        let payoff = Payoff::basket_call(vec![1.0], 100.0).unwrap();
        let phi = market.payoff_fn(payoff.clone()).unwrap();
        (
            GaussianShiftModel::new(phi, DriftMatrix::Identity(1), 1, 1).unwrap(),
            market,
            payoff,
        )
    }

    #[test]
    fn call_oracle_reproduces_closed_form() {
        let (model, market, payoff) = call();
        let o = QuadratureOracle::for_market(&model, &market, &payoff).unwrap();
        assert_eq!(o.breakpoints().len(), 1);
        let bs = bs_call_price(100.0, 100.0, 0.05, 0.2, 1.0);
        assert!((o.mean() - bs).abs() < 1e-10, "{} vs {bs}", o.mean());
        let ts = o.theta_star();
        assert!(o.v_derivative(ts, 1e-4).abs() < 1e-3);
        assert!(o.v(ts) < o.v(ts - 0.01) && o.v(ts) < o.v(ts + 0.01));
        assert_eq!(model.payoff_evals(), 0);
    }

    #[test]
    fn second_moment_at_zero_matches_closed_form() {
        // E[(S_T - K)_+^2] e^{-2rT} from lognormal moments.
        let (model, market, payoff) = call();
        let o = QuadratureOracle::for_market(&model, &market, &payoff).unwrap();
        let (s, k, r, v, t) = (100.0f64, 100.0f64, 0.05f64, 0.2f64, 1.0f64);
        let sd = v * t.sqrt();
        let d2 = ((s / k).ln() + (r - 0.5 * v * v) * t) / sd;
        let n = crate::normal::norm_cdf;
        let es2 = s * s * ((2.0 * r + v * v) * t).exp() * n(d2 + 2.0 * sd);
        let es = s * (r * t).exp() * n(d2 + sd);
        let exact = (-2.0 * r * t).exp() * (es2 - 2.0 * k * es + k * k * n(d2));
        assert!(((o.v(0.0) - exact) / exact).abs() < 1e-10, "{} vs {exact}", o.v(0.0));
    }

    #[test]
    fn rejects_higher_dimensions() {
        let m = GaussianShiftModel::new(Arc::new(|_| 1.0), DriftMatrix::Identity(2), 1, 2).unwrap();
        assert_eq!(
            QuadratureOracle::from_model(&m, vec![]).unwrap_err(),
            Error::UnsupportedDimension { got: 2 }
        );
        let market = MarketModel::new(vec![1.0, 1.0], vec![0.1, 0.1], 0.0, 0.0, vec![1.0]).unwrap();
        assert!(market_breakpoints(&market, &Payoff::basket_call(vec![1.0, 1.0], 1.0).unwrap()).is_err());
    }

    #[test]
    fn golden_section_quadratic() {
        let x = golden_section(|t| (t - 1.234).powi(2), -10.0, 10.0, 1e-9);
        assert!((x - 1.234).abs() < 1e-8);
    }
}
