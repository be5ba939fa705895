//! Correlated multi-asset Black-Scholes paths driven by a standard Gaussian
//! vector, and the basket payoffs priced on them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{time_steps, PayoffFn};
use crate::normal::norm_cdf;

/// Lower Cholesky factor of the equicorrelation matrix
/// `Gamma_ij = 1 if i == j else rho`, row-major `assets x assets`.
pub fn cholesky_factor(assets: usize, rho: f64) -> Result<Vec<f64>> {
    if assets == 0 {
        return Err(Error::invalid("assets", "must be at least 1"));
    }
    let lower = if assets > 1 {
        -1.0 / (assets as f64 - 1.0)
    } else {
        f64::NEG_INFINITY
    };
    if !(rho > lower && rho < 1.0) && !(assets == 1 && rho.is_finite()) {
        return Err(Error::NotPositiveDefinite { rho, lower, assets });
    }
    let gamma = |i: usize, j: usize| if i == j { 1.0 } else { rho };
    let mut l = vec![0.0; assets * assets];
    for i in 0..assets {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * assets + k] * l[j * assets + k]).sum();
            if i == j {
                let d = gamma(i, i) - s;
                if d <= 0.0 {
                    return Err(Error::NotPositiveDefinite { rho, lower, assets });
                }
                l[i * assets + i] = d.sqrt();
            } else {
                l[i * assets + j] = (gamma(i, j) - s) / l[j * assets + j];
            }
        }
    }
    Ok(l)
}

/// Constant-volatility correlated lognormal model on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    spots: Vec<f64>,
    vols: Vec<f64>,
    rate: f64,
    rho: f64,
    grid: Vec<f64>,
    steps: Vec<f64>,
    chol: Vec<f64>,
}

impl MarketModel {
    pub fn new(spots: Vec<f64>, vols: Vec<f64>, rate: f64, rho: f64, grid: Vec<f64>) -> Result<Self> {
        let assets = spots.len();
        if assets == 0 {
            return Err(Error::invalid("spots", "need at least one asset"));
        }
        if vols.len() != assets {
            return Err(Error::DimensionMismatch {
                what: "vols",
                expected: assets,
                got: vols.len(),
            });
        }
        if let Some(s) = spots.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::invalid("spots", format!("must be finite and > 0, got {s}")));
        }
        if let Some(v) = vols.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid("vols", format!("must be finite and >= 0, got {v}")));
        }
        if !rate.is_finite() {
            return Err(Error::invalid("rate", "must be finite"));
        }
        let steps = time_steps(&grid)?;
        let chol = cholesky_factor(assets, rho)?;
        Ok(Self {
            spots,
            vols,
            rate,
            rho,
            grid,
            steps,
            chol,
        })
    }

    /// Grid of `steps` equal dates ending at `maturity`.
    pub fn uniform_grid(maturity: f64, steps: usize) -> Vec<f64> {
        (1..=steps).map(|k| maturity * k as f64 / steps as f64).collect()
    }

    pub fn assets(&self) -> usize {
        self.spots.len()
    }

    pub fn dates(&self) -> usize {
        self.grid.len()
    }

    /// Length `N * D` of the driving Gaussian vector.
    pub fn noise_dim(&self) -> usize {
        self.assets() * self.dates()
    }

    pub fn spots(&self) -> &[f64] {
        &self.spots
    }

    pub fn vols(&self) -> &[f64] {
        &self.vols
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn maturity(&self) -> f64 {
        *self.grid.last().expect("grid is non-empty")
    }

    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    fn check_noise(&self, g: &[f64]) -> Result<()> {
        if g.len() == self.noise_dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what: "gaussian path input",
                expected: self.noise_dim(),
                got: g.len(),
            })
        }
    }

    /// Walks the path, calling `visit(k, S_{t_k})` after each date.
    /// `g` is read in blocks of `D` per date.
    fn walk(&self, g: &[f64], mut visit: impl FnMut(usize, &[f64]) -> bool) {
        let d = self.assets();
        let mut s = self.spots.clone();
        let mut z = vec![0.0; d];
        for (k, (dt, block)) in self.steps.iter().zip(g.chunks_exact(d)).enumerate() {
            for (i, zi) in z.iter_mut().enumerate() {
                let row = &self.chol[i * d..i * d + i + 1];
                *zi = row.iter().zip(block).map(|(l, x)| l * x).sum();
            }
            let sq = dt.sqrt();
            for ((si, vol), zi) in s.iter_mut().zip(&self.vols).zip(&z) {
                *si *= ((self.rate - 0.5 * vol * vol) * dt + vol * sq * zi).exp();
            }
            if !visit(k, &s) {
                return;
            }
        }
    }

    /// Asset prices `S^i_{t_k}`, row `k` per date.
    pub fn simulate_path(&self, g: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_noise(g)?;
        let mut rows = Vec::with_capacity(self.dates());
        self.walk(g, |_, s| {
            rows.push(s.to_vec());
            true
        });
        Ok(rows)
    }

    pub fn payoff_value(&self, payoff: &Payoff, g: &[f64]) -> Result<f64> {
        self.check_noise(g)?;
        payoff.check_assets(self.assets())?;
        Ok(self.payoff_unchecked(payoff, g))
    }

    fn payoff_unchecked(&self, payoff: &Payoff, g: &[f64]) -> f64 {
        let last = self.dates() - 1;
        let mut alive = true;
        let mut value = 0.0;
        self.walk(g, |k, s| {
            if let Some(barriers) = payoff.barriers() {
                if s.iter().zip(barriers).any(|(si, l)| si < l) {
                    alive = false;
                    return false;
                }
            }
            if k == last {
                let basket: f64 = s.iter().zip(payoff.weights()).map(|(si, w)| si * w).sum();
                value = (basket - payoff.strike()).max(0.0);
            }
            true
        });
        if !alive {
            return 0.0;
        }
        if payoff.discounted() {
            value * (-self.rate * self.maturity()).exp()
        } else {
            value
        }
    }

    /// The payoff as a functional of the Gaussian input, for use in a
    /// [`GaussianShiftModel`](crate::models::GaussianShiftModel).
    pub fn payoff_fn(self: &Arc<Self>, payoff: Payoff) -> Result<PayoffFn> {
        payoff.check_assets(self.assets())?;
        let model = Arc::clone(self);
        Ok(Arc::new(move |g: &[f64]| model.payoff_unchecked(&payoff, g)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payoff {
    /// `(sum w_i S^i_T - K)_+`; weights may be negative.
    BasketCall {
        weights: Vec<f64>,
        strike: f64,
        discount: bool,
    },
    /// Basket call paying only if `S^i_{t_j} >= L^i` at every grid date.
    DownOutBasketCall {
        weights: Vec<f64>,
        strike: f64,
        barriers: Vec<f64>,
        discount: bool,
    },
}

impl Payoff {
    pub fn basket_call(weights: Vec<f64>, strike: f64) -> Result<Self> {
        check_strike(strike)?;
        Ok(Payoff::BasketCall {
            weights,
            strike,
            discount: true,
        })
    }

    pub fn down_out_basket_call(weights: Vec<f64>, strike: f64, barriers: Vec<f64>) -> Result<Self> {
        check_strike(strike)?;
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(
                "weights",
                format!("barrier basket weights must be >= 0, got {w}"),
            ));
        }
        if barriers.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "barriers",
                expected: weights.len(),
                got: barriers.len(),
            });
        }
        Ok(Payoff::DownOutBasketCall {
            weights,
            strike,
            barriers,
            discount: true,
        })
    }

    pub fn undiscounted(mut self) -> Self {
        match &mut self {
            Payoff::BasketCall { discount, .. } | Payoff::DownOutBasketCall { discount, .. } => *discount = false,
        }
        self
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Payoff::BasketCall { weights, .. } | Payoff::DownOutBasketCall { weights, .. } => weights,
        }
    }

    pub fn strike(&self) -> f64 {
        match self {
            Payoff::BasketCall { strike, .. } | Payoff::DownOutBasketCall { strike, .. } => *strike,
        }
    }

    pub fn barriers(&self) -> Option<&[f64]> {
        match self {
            Payoff::BasketCall { .. } => None,
            Payoff::DownOutBasketCall { barriers, .. } => Some(barriers),
        }
    }

    pub fn discounted(&self) -> bool {
        match self {
            Payoff::BasketCall { discount, .. } | Payoff::DownOutBasketCall { discount, .. } => *discount,
        }
    }

    fn check_assets(&self, assets: usize) -> Result<()> {
        if self.weights().len() != assets {
            return Err(Error::DimensionMismatch {
                what: "payoff weights",
                expected: assets,
                got: self.weights().len(),
            });
        }
        Ok(())
    }
}

fn check_strike(strike: f64) -> Result<()> {
    if strike.is_finite() && strike > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "strike",
            format!("must be finite and > 0, got {strike}"),
        ))
    }
}

/// Black-Scholes price of a European call.
pub fn bs_call_price(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64) -> f64 {
    let df = (-rate * maturity).exp();
    let forward = spot * (rate * maturity).exp();
    let sd = vol * maturity.sqrt();
    if sd == 0.0 {
        return df * (forward - strike).max(0.0);
    }
    let d1 = ((forward / strike).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    df * (forward * norm_cdf(d1) - strike * norm_cdf(d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cholesky_examples() {
        assert_eq!(
            cholesky_factor(3, 0.0).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
        );
        let l = cholesky_factor(2, 0.5).unwrap();
        assert_eq!(l[0], 1.0);
        assert_eq!(l[1], 0.0);
        assert!((l[2] - 0.5).abs() < 1e-15);
        assert!((l[3] - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((l[3] - 0.866_025).abs() < 1e-6);
        assert!(matches!(
            cholesky_factor(3, -0.6),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(cholesky_factor(40, -0.5).is_err());
        assert!(cholesky_factor(2, 1.0).is_err());
    }

    #[test]
    fn cholesky_reproduces_correlation() {
        for &(d, rho) in &[(5, 0.3), (40, 0.1), (40, 0.9), (10, -0.1)] {
            let l = cholesky_factor(d, rho).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let v: f64 = (0..d).map(|k| l[i * d + k] * l[j * d + k]).sum();
                    let want = if i == j { 1.0 } else { rho };
                    assert!((v - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_paths() {
        let m = MarketModel::new(vec![100.0], vec![0.0], 0.05, 0.0, vec![1.0]).unwrap();
        let p = m.simulate_path(&[1.7]).unwrap();
        assert!((p[0][0] - 100.0 * 0.05f64.exp()).abs() < 1e-12);

        let m = MarketModel::new(vec![50.0, 20.0], vec![0.2, 0.3], 0.03, 0.4, vec![0.5, 1.0]).unwrap();
        let p = m.simulate_path(&[0.0; 4]).unwrap();
        for (k, t) in [0.5f64, 1.0].iter().enumerate() {
            assert!((p[k][0] - 50.0 * ((0.03 - 0.02) * t).exp()).abs() < 1e-12);
            assert!((p[k][1] - 20.0 * ((0.03 - 0.045) * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_step_lognormal() {
        let m = MarketModel::new(vec![100.0], vec![0.2], 0.05, 0.0, vec![1.0]).unwrap();
        let s = m.simulate_path(&[1.0]).unwrap()[0][0];
        assert!((s - 100.0 * (0.03f64 + 0.2).exp()).abs() < 1e-12);
        assert!((s - 125.860).abs() < 1e-3);
    }

    #[test]
    fn payoff_examples() {
        let m = MarketModel::new(vec![100.0], vec![0.0], 0.05, 0.0, vec![1.0]).unwrap();
        let far = Payoff::basket_call(vec![1.0], 1e9).unwrap();
        assert_eq!(m.payoff_value(&far, &[3.0]).unwrap(), 0.0);
        let call = Payoff::basket_call(vec![1.0], 80.0).unwrap();
        let want = (-0.05f64).exp() * (100.0 * 0.05f64.exp() - 80.0);
        assert!((m.payoff_value(&call, &[0.0]).unwrap() - want).abs() < 1e-12);

        let mm = MarketModel::new(
            vec![50.0, 40.0],
            vec![0.2, 0.2],
            0.05,
            0.3,
            MarketModel::uniform_grid(2.0, 24),
        )
        .unwrap();
        let dao = Payoff::down_out_basket_call(vec![0.5, 0.5], 1.0, vec![40.0, 30.0]).unwrap();
        assert_eq!(mm.payoff_value(&dao, &vec![-5.0; 48]).unwrap(), 0.0);
        assert!(mm.payoff_value(&dao, &vec![0.5; 48]).unwrap() > 0.0);
    }

    #[test]
    fn barrier_monitored_at_every_date() {
        // Knock-out in the middle of the path even though the final value recovers.
        let m = MarketModel::new(vec![100.0], vec![0.2], 0.0, 0.0, vec![1.0, 2.0]).unwrap();
        let dao = Payoff::down_out_basket_call(vec![1.0], 50.0, vec![90.0])
            .unwrap()
            .undiscounted();
        let vanilla = Payoff::basket_call(vec![1.0], 50.0).unwrap().undiscounted();
        let g = [-1.0, 3.0];
        assert_eq!(m.payoff_value(&dao, &g).unwrap(), 0.0);
        assert!(m.payoff_value(&vanilla, &g).unwrap() > 0.0);
    }

    #[test]
    fn shape_errors() {
        let m = MarketModel::new(vec![100.0, 90.0], vec![0.2, 0.2], 0.05, 0.0, vec![1.0]).unwrap();
        assert!(m.simulate_path(&[0.0]).is_err());
        let p = Payoff::basket_call(vec![1.0], 100.0).unwrap();
        assert!(m.payoff_value(&p, &[0.0, 0.0]).is_err());
        assert!(MarketModel::new(vec![100.0], vec![0.2], 0.05, 0.0, vec![1.0, 0.5]).is_err());
        assert!(MarketModel::new(vec![-1.0], vec![0.2], 0.05, 0.0, vec![1.0]).is_err());
        assert!(Payoff::basket_call(vec![1.0], 0.0).is_err());
        assert!(Payoff::down_out_basket_call(vec![1.0], 1.0, vec![]).is_err());
    }

    #[test]
    fn black_scholes_values() {
        assert!((bs_call_price(100.0, 100.0, 0.05, 0.2, 1.0) - 10.450_583_572_185_565).abs() < 1e-10);
        let det = (-0.05f64).exp() * (100.0 * 0.05f64.exp() - 80.0);
        assert!((bs_call_price(100.0, 80.0, 0.05, 1e-9, 1.0) - det).abs() < 1e-9);
        assert!((det - 23.901).abs() < 1e-3);
        assert!(bs_call_price(100.0, 1e12, 0.05, 0.2, 1.0) < 1e-12);
    }

    proptest! {
        #[test]
        fn paths_are_pure_functions_of_input(g in proptest::collection::vec(-4.0f64..4.0, 6)) {
            let m = MarketModel::new(vec![50.0, 40.0], vec![0.2, 0.3], 0.05, 0.3, vec![0.3, 0.6, 1.0]).unwrap();
            let a = m.simulate_path(&g).unwrap();
            let b = m.simulate_path(&g).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
