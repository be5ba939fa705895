//! Parametric representations `E[Z] = E[H(theta, X)]` and gradient estimators
//! `E[U(theta, X)] = grad v(theta)` of the second moment `v`.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::NoiseStream;

/// Payoff functional on the Gaussian input space.
pub type PayoffFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A family of unbiased estimators indexed by `theta` together with a
/// stochastic gradient of their second moment.
pub trait ParametricRepresentation {
    /// Dimension `m` of a noise sample `X`.
    fn sample_dim(&self) -> usize;

    /// Dimension `d` of `theta`.
    fn param_dim(&self) -> usize;

    fn draw(&self, stream: &mut NoiseStream, x: &mut [f64]) {
        stream.fill_normal(x);
    }

    fn h(&self, theta: &[f64], x: &[f64]) -> Result<f64>;

    /// Writes `U(theta, x)` into `out`.
    fn u(&self, theta: &[f64], x: &[f64], out: &mut [f64]) -> Result<()>;

    /// `(H(theta, x), U(theta, x))`; implementations may share work.
    fn h_and_u(&self, theta: &[f64], x: &[f64], out: &mut [f64]) -> Result<f64> {
        let h = self.h(theta, x)?;
        self.u(theta, x, out)?;
        Ok(h)
    }

    /// Number of payoff evaluations performed so far.
    fn payoff_evals(&self) -> u64;
}

/// Matrix `A` (rows = sample dimension, columns = parameter dimension) used in
/// the drift shift `x + A theta`.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftMatrix {
    Identity(usize),
    /// Row-major dense matrix.
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
}

impl DriftMatrix {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "drift matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        let m = DriftMatrix::Dense { rows, cols, data };
        m.check_full_column_rank()?;
        Ok(m)
    }

    /// `I_{N D}`.
    pub fn identity(steps: usize, assets: usize) -> Self {
        DriftMatrix::Identity(steps * assets)
    }

    /// Column `(sqrt(t_1), sqrt(t_2 - t_1), ...)` for a single asset.
    pub fn cameron_martin(grid: &[f64]) -> Result<Self> {
        Self::block_drift(grid, 1)
    }

    /// Stacked blocks `sqrt(t_k - t_{k-1}) I_D`, so that `x + A theta` shifts the
    /// Brownian path at `t_k` by `theta t_k`.
    pub fn block_drift(grid: &[f64], assets: usize) -> Result<Self> {
        let steps = time_steps(grid)?;
        if assets == 0 {
            return Err(Error::invalid("assets", "must be at least 1"));
        }
        let rows = steps.len() * assets;
        let mut data = vec![0.0; rows * assets];
        for (k, dt) in steps.iter().enumerate() {
            let s = dt.sqrt();
            for j in 0..assets {
                data[(k * assets + j) * assets + j] = s;
            }
        }
        Ok(DriftMatrix::Dense {
            rows,
            cols: assets,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        match self {
            DriftMatrix::Identity(n) => *n,
            DriftMatrix::Dense { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            DriftMatrix::Identity(n) => *n,
            DriftMatrix::Dense { cols, .. } => *cols,
        }
    }

    /// `out = A theta`.
    pub fn apply(&self, theta: &[f64], out: &mut [f64]) {
        match self {
            DriftMatrix::Identity(_) => out.copy_from_slice(theta),
            DriftMatrix::Dense { cols, data, .. } => {
                for (o, row) in out.iter_mut().zip(data.chunks_exact(*cols)) {
                    *o = row.iter().zip(theta).map(|(a, t)| a * t).sum();
                }
            }
        }
    }

    /// `out = A^T y`.
    pub fn apply_transpose(&self, y: &[f64], out: &mut [f64]) {
        match self {
            DriftMatrix::Identity(_) => out.copy_from_slice(y),
            DriftMatrix::Dense { cols, data, .. } => {
                out.fill(0.0);
                for (row, yi) in data.chunks_exact(*cols).zip(y) {
                    if *yi == 0.0 {
                        continue;
                    }
                    for (o, a) in out.iter_mut().zip(row) {
                        *o += a * yi;
                    }
                }
            }
        }
    }

    fn check_full_column_rank(&self) -> Result<()> {
        let DriftMatrix::Dense { rows, cols, data } = self else {
            return Ok(());
        };
        if cols > rows {
            return Err(Error::RankDeficient);
        }
        let gram = nalgebra::DMatrix::from_fn(*cols, *cols, |i, j| {
            (0..*rows).map(|r| data[r * cols + i] * data[r * cols + j]).sum::<f64>()
        });
        let scale = gram.diagonal().max().max(f64::MIN_POSITIVE);
        match gram.cholesky() {
            Some(ch) if ch.l().diagonal().iter().all(|&d| d * d > 1e-12 * scale) => Ok(()),
            _ => Err(Error::RankDeficient),
        }
    }
}

/// Increments `t_k - t_{k-1}` of a strictly increasing grid with `t_0 = 0`.
pub fn time_steps(grid: &[f64]) -> Result<Vec<f64>> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        if !(t.is_finite() && t > prev) {
            return Err(Error::InvalidGrid(format!(
                "t_{} = {t} does not exceed t_{} = {prev}",
                k + 1,
                k
            )));
        }
        out.push(t - prev);
        prev = t;
    }
    Ok(out)
}

/// Which gradient estimator drives the stochastic approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientKind {
    /// Payoff evaluated at the unshifted sample `g`.
    U1,
    /// Payoff evaluated at the shifted sample `g + A theta`, shared with `H`.
    #[default]
    U2,
}

/// Gaussian drift-shift importance sampling
/// `H(theta, g) = phi(g + A theta) exp(-A theta . g - |A theta|^2 / 2)`.
pub struct GaussianShiftModel {
    phi: PayoffFn,
    drift: DriftMatrix,
    steps: usize,
    assets: usize,
    evals: AtomicU64,
}

impl fmt::Debug for GaussianShiftModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaussianShiftModel")
            .field("drift", &self.drift)
            .field("steps", &self.steps)
            .field("assets", &self.assets)
            .field("evals", &self.evals)
            .finish_non_exhaustive()
    }
}

impl GaussianShiftModel {
    pub fn new(phi: PayoffFn, drift: DriftMatrix, steps: usize, assets: usize) -> Result<Self> {
        if drift.rows() != steps * assets {
            return Err(Error::DimensionMismatch {
                what: "drift matrix rows",
                expected: steps * assets,
                got: drift.rows(),
            });
        }
        drift.check_full_column_rank()?;
        Ok(Self {
            phi,
            drift,
            steps,
            assets,
            evals: AtomicU64::new(0),
        })
    }

    pub fn sample_dim(&self) -> usize {
        self.steps * self.assets
    }

    pub fn param_dim(&self) -> usize {
        self.drift.cols()
    }

    /// The uncounted payoff functional.
    pub fn payoff_fn(&self) -> &PayoffFn {
        &self.phi
    }

    pub fn drift(&self) -> &DriftMatrix {
        &self.drift
    }

    pub fn payoff_evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Evaluates `phi` and counts the call.
    pub fn payoff(&self, x: &[f64]) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let v = (self.phi)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinitePayoff { value: v })
        }
    }

    fn check(&self, theta: &[f64], g: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                what: "theta",
                expected: self.param_dim(),
                got: theta.len(),
            });
        }
        if g.len() != self.sample_dim() {
            return Err(Error::DimensionMismatch {
                what: "gaussian sample",
                expected: self.sample_dim(),
                got: g.len(),
            });
        }
        Ok(())
    }

    /// `A theta`, `(A theta) . g` and `|A theta|^2`.
    fn shift(&self, theta: &[f64], g: &[f64]) -> (Vec<f64>, f64, f64) {
        let mut at = vec![0.0; self.sample_dim()];
        self.drift.apply(theta, &mut at);
        let dot = at.iter().zip(g).map(|(a, b)| a * b).sum();
        let sq = at.iter().map(|a| a * a).sum();
        (at, dot, sq)
    }

    fn shifted_payoff(&self, at: &[f64], g: &[f64]) -> Result<f64> {
        let shifted: Vec<f64> = g.iter().zip(at).map(|(x, a)| x + a).collect();
        self.payoff(&shifted)
    }

    pub fn h_value(&self, theta: &[f64], g: &[f64]) -> Result<f64> {
        self.check(theta, g)?;
        let (at, dot, sq) = self.shift(theta, g);
        let p = self.shifted_payoff(&at, g)?;
        Ok(p * (-dot - 0.5 * sq).exp())
    }

    /// `U1(theta, g) = A^T (A theta - g) phi(g)^2 exp(-A theta . g + |A theta|^2 / 2)`.
    pub fn u1_value(&self, theta: &[f64], g: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(theta, g)?;
        check_out(out, self.param_dim())?;
        let p = self.payoff(g)?;
        if p == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        let (mut at, dot, sq) = self.shift(theta, g);
        let scale = p * p * (-dot + 0.5 * sq).exp();
        for (a, x) in at.iter_mut().zip(g) {
            *a -= x;
        }
        self.drift.apply_transpose(&at, out);
        scale_saturating(out, scale);
        Ok(())
    }

    /// `U2(theta, g) = -A^T g phi(g + A theta)^2 exp(-2 A theta . g - |A theta|^2)`.
    pub fn u2_value(&self, theta: &[f64], g: &[f64], out: &mut [f64]) -> Result<()> {
        self.coupled_h_u2(theta, g, out).map(|_| ())
    }

    /// `H` and `U2` from a single payoff evaluation at `g + A theta`.
    pub fn coupled_h_u2(&self, theta: &[f64], g: &[f64], out: &mut [f64]) -> Result<f64> {
        self.check(theta, g)?;
        check_out(out, self.param_dim())?;
        let (at, dot, sq) = self.shift(theta, g);
        let p = self.shifted_payoff(&at, g)?;
        let h = p * (-dot - 0.5 * sq).exp();
        if p == 0.0 {
            out.fill(0.0);
            return Ok(h);
        }
        let scale = -(p * p) * (-2.0 * dot - sq).exp();
        self.drift.apply_transpose(g, out);
        scale_saturating(out, scale);
        Ok(h)
    }

    /// View of this model with a chosen gradient estimator.
    pub fn with_gradient(&self, kind: GradientKind) -> ShiftRepresentation<'_> {
        ShiftRepresentation { model: self, kind }
    }
}

fn check_out(out: &[f64], d: usize) -> Result<()> {
    if out.len() == d {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what: "gradient output",
            expected: d,
            got: out.len(),
        })
    }
}

/// `out *= scale`, keeping exact zeros when `scale` overflowed to infinity.
fn scale_saturating(out: &mut [f64], scale: f64) {
    for o in out {
        if *o != 0.0 {
            *o *= scale;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShiftRepresentation<'a> {
    model: &'a GaussianShiftModel,
    kind: GradientKind,
}

impl ShiftRepresentation<'_> {
    pub fn kind(&self) -> GradientKind {
        self.kind
    }
}

impl ParametricRepresentation for ShiftRepresentation<'_> {
    fn sample_dim(&self) -> usize {
        self.model.sample_dim()
    }

    fn param_dim(&self) -> usize {
        self.model.param_dim()
    }

    fn h(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.model.h_value(theta, x)
    }

    fn u(&self, theta: &[f64], x: &[f64], out: &mut [f64]) -> Result<()> {
        match self.kind {
            GradientKind::U1 => self.model.u1_value(theta, x, out),
            GradientKind::U2 => self.model.u2_value(theta, x, out),
        }
    }

    fn h_and_u(&self, theta: &[f64], x: &[f64], out: &mut [f64]) -> Result<f64> {
        match self.kind {
            GradientKind::U1 => {
                let h = self.model.h_value(theta, x)?;
                self.model.u1_value(theta, x, out)?;
                Ok(h)
            }
            GradientKind::U2 => self.model.coupled_h_u2(theta, x, out),
        }
    }

    fn payoff_evals(&self) -> u64 {
        self.model.payoff_evals()
    }
}

/// Base law of an exponential family tilt `p_theta(x) = p(x) exp(theta . x - psi(theta))`.
pub trait EsscherFamily: Send + Sync {
    fn dim(&self) -> usize;

    /// Cumulant `log E[exp(theta . X)]`, `None` outside its domain.
    fn cumulant(&self, theta: &[f64]) -> Option<f64>;

    fn cumulant_gradient(&self, theta: &[f64], out: &mut [f64]);

    /// Base noise from which tilted variates are built.
    fn draw_noise(&self, stream: &mut NoiseStream, out: &mut [f64]);

    /// Maps base noise to a variate with density `p_theta`.
    fn tilt(&self, theta: &[f64], noise: &[f64], out: &mut [f64]);
}

/// Standard Gaussian base; tilting shifts the mean by `theta`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianFamily {
    pub dim: usize,
}

impl EsscherFamily for GaussianFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn cumulant(&self, theta: &[f64]) -> Option<f64> {
        Some(0.5 * theta.iter().map(|t| t * t).sum::<f64>())
    }

    fn cumulant_gradient(&self, theta: &[f64], out: &mut [f64]) {
        out.copy_from_slice(theta);
    }

    fn draw_noise(&self, stream: &mut NoiseStream, out: &mut [f64]) {
        stream.fill_normal(out);
    }

    fn tilt(&self, theta: &[f64], noise: &[f64], out: &mut [f64]) {
        for ((o, z), t) in out.iter_mut().zip(noise).zip(theta) {
            *o = z + t;
        }
    }
}

/// Exponential law with rate `lambda`; the tilt at `theta < lambda` is
/// exponential with rate `lambda - theta`.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialFamily {
    pub rate: f64,
}

impl EsscherFamily for ExponentialFamily {
    fn dim(&self) -> usize {
        1
    }

    fn cumulant(&self, theta: &[f64]) -> Option<f64> {
        let t = theta[0];
        (t < self.rate).then(|| (self.rate / (self.rate - t)).ln())
    }

    fn cumulant_gradient(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = 1.0 / (self.rate - theta[0]);
    }

    fn draw_noise(&self, stream: &mut NoiseStream, out: &mut [f64]) {
        out[0] = stream.next_exponential();
    }

    fn tilt(&self, theta: &[f64], noise: &[f64], out: &mut [f64]) {
        out[0] = noise[0] / (self.rate - theta[0]);
    }
}

/// Exponential change of measure applied to an integrand `f`.
pub struct EsscherModel<F> {
    family: F,
    f: PayoffFn,
    evals: AtomicU64,
}

impl<F: EsscherFamily> EsscherModel<F> {
    pub fn new(family: F, f: PayoffFn) -> Self {
        Self {
            family,
            f,
            evals: AtomicU64::new(0),
        }
    }

    pub fn family(&self) -> &F {
        &self.family
    }

    fn integrand(&self, x: &[f64]) -> Result<f64> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinitePayoff { value: v })
        }
    }

    fn cumulant(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.family.dim() {
            return Err(Error::DimensionMismatch {
                what: "theta",
                expected: self.family.dim(),
                got: theta.len(),
            });
        }
        self.family
            .cumulant(theta)
            .ok_or_else(|| Error::OutsideCumulantDomain { theta: theta.to_vec() })
    }

    /// `f(x) exp(-theta . x + psi(theta))` for a variate `x` drawn from `p_theta`.
    pub fn esscher_h_value(&self, theta: &[f64], x_tilted: &[f64]) -> Result<f64> {
        let psi = self.cumulant(theta)?;
        let dot: f64 = theta.iter().zip(x_tilted).map(|(t, x)| t * x).sum();
        Ok(self.integrand(x_tilted)? * (-dot + psi).exp())
    }

    pub fn tilted_sample(&self, theta: &[f64], noise: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.family.dim()];
        self.family.tilt(theta, noise, &mut x);
        x
    }
}

impl<F: EsscherFamily> ParametricRepresentation for EsscherModel<F> {
    fn sample_dim(&self) -> usize {
        self.family.dim()
    }

    fn param_dim(&self) -> usize {
        self.family.dim()
    }

    fn draw(&self, stream: &mut NoiseStream, x: &mut [f64]) {
        self.family.draw_noise(stream, x);
    }

    fn h(&self, theta: &[f64], noise: &[f64]) -> Result<f64> {
        self.cumulant(theta)?;
        let x = self.tilted_sample(theta, noise);
        self.esscher_h_value(theta, &x)
    }

    /// `f(X)^2 (grad psi(theta) - X) exp(-theta . X + psi(theta))` with `X` from the base law.
    fn u(&self, theta: &[f64], noise: &[f64], out: &mut [f64]) -> Result<()> {
        let psi = self.cumulant(theta)?;
        let zero = vec![0.0; theta.len()];
        let x = self.tilted_sample(&zero, noise);
        let fx = self.integrand(&x)?;
        if fx == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        let dot: f64 = theta.iter().zip(&x).map(|(t, v)| t * v).sum();
        self.family.cumulant_gradient(theta, out);
        for (o, v) in out.iter_mut().zip(&x) {
            *o -= v;
        }
        scale_saturating(out, fx * fx * (-dot + psi).exp());
        Ok(())
    }

    fn payoff_evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}
