//! Sectioned key-value experiment configuration.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment (also `;`), blank lines ignored
//! [section]
//! key = value            # trailing comments allowed
//! list-key = 1, 2, 3     # comma separated lists
//! ```
//!
//! Sections are `model`, `payoff`, `algorithm`, `run` and the optional `table`.
//! Scalar values given for per-asset lists (`spots`, `vols`, `weights`,
//! `barriers`) are broadcast to every asset.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimator::{AdisVariant, SaSettings, ThetaSource};
use crate::market::{cholesky_factor, MarketModel, Payoff};
use crate::models::{DriftMatrix, GaussianShiftModel, GradientKind};
use crate::sa::{AverageNormalization, CompactSchedule, GainSchedule};

/// Algorithm selected by `algorithm.variant`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Crude,
    Adis(AdisVariant),
    /// Two-phase scheme plugging in the raw or the averaged final iterate.
    Nadis(ThetaSource),
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Crude,
        Variant::Adis(AdisVariant::Xi1),
        Variant::Adis(AdisVariant::Xi2),
        Variant::Adis(AdisVariant::Xi1Avg),
        Variant::Adis(AdisVariant::Xi2Avg),
        Variant::Nadis(ThetaSource::Raw),
        Variant::Nadis(ThetaSource::Averaged),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Crude => "crude",
            Variant::Adis(AdisVariant::Xi1) => "adis-xi1",
            Variant::Adis(AdisVariant::Xi2) => "adis-xi2",
            Variant::Adis(AdisVariant::Xi1Avg) => "adis-xi1avg",
            Variant::Adis(AdisVariant::Xi2Avg) => "adis-xi2avg",
            Variant::Nadis(ThetaSource::Raw) => "nadis-raw",
            Variant::Nadis(ThetaSource::Averaged) => "nadis-avg",
        }
    }

    /// Payoff evaluations per sample: one for `adis-xi2` and crude Monte Carlo, two otherwise.
    pub fn evals_per_sample(self) -> u64 {
        match self {
            Variant::Crude | Variant::Adis(AdisVariant::Xi2) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            format!(
                "expected one of {}, got `{s}`",
                names(Variant::ALL.iter().map(|v| v.name()))
            )
        })
    }
}

fn names<'a>(it: impl Iterator<Item = &'a str>) -> String {
    it.collect::<Vec<_>>().join(", ")
}

/// Choice of the drift matrix `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftKind {
    #[default]
    Identity,
    /// Single column shifting a one-asset Brownian path by `theta t`.
    CameronMartin,
    /// One column per asset shifting each Brownian path by `theta_i t`.
    Block,
}

impl DriftKind {
    pub fn name(self) -> &'static str {
        match self {
            DriftKind::Identity => "identity",
            DriftKind::CameronMartin => "cameron-martin",
            DriftKind::Block => "block",
        }
    }

    pub fn matrix(self, grid: &[f64], assets: usize) -> Result<DriftMatrix> {
        match self {
            DriftKind::Identity => Ok(DriftMatrix::identity(grid.len(), assets)),
            DriftKind::CameronMartin if assets != 1 => Err(Error::invalid(
                "drift",
                format!("cameron-martin needs a single asset, got {assets}"),
            )),
            DriftKind::CameronMartin => DriftMatrix::cameron_martin(grid),
            DriftKind::Block => DriftMatrix::block_drift(grid, assets),
        }
    }

    /// Parameter dimension produced for `steps` dates and `assets` assets.
    pub fn param_dim(self, steps: usize, assets: usize) -> usize {
        match self {
            DriftKind::Identity => steps * assets,
            DriftKind::CameronMartin => 1,
            DriftKind::Block => assets,
        }
    }
}

impl FromStr for DriftKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "identity" => Ok(DriftKind::Identity),
            "cameron-martin" => Ok(DriftKind::CameronMartin),
            "block" => Ok(DriftKind::Block),
            other => Err(format!("expected identity, cameron-martin or block, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffKind {
    BasketCall,
    DownOutBasketCall,
}

impl PayoffKind {
    fn name(self) -> &'static str {
        match self {
            PayoffKind::BasketCall => "basket-call",
            PayoffKind::DownOutBasketCall => "down-out-basket-call",
        }
    }
}

impl FromStr for PayoffKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "basket-call" | "call" => Ok(PayoffKind::BasketCall),
            "down-out-basket-call" | "down-out-call" => Ok(PayoffKind::DownOutBasketCall),
            other => Err(format!("expected basket-call or down-out-basket-call, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub spots: Vec<f64>,
    pub vols: Vec<f64>,
    pub rate: f64,
    pub rho: f64,
    /// Monitoring dates `t_1 < ... < t_N = T`.
    pub grid: Vec<f64>,
}

impl ModelConfig {
    pub fn assets(&self) -> usize {
        self.spots.len()
    }

    pub fn maturity(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffConfig {
    pub kind: PayoffKind,
    pub weights: Vec<f64>,
    pub strike: f64,
    pub barriers: Option<Vec<f64>>,
    pub discount: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub n: u64,
    pub gamma: f64,
    pub a: f64,
    pub tau: f64,
    pub r0: f64,
    pub growth: f64,
    pub theta0: Vec<f64>,
    pub drift: DriftKind,
    pub avg_normalize: AverageNormalization,
    /// Gradient driving the two-phase variants.
    pub gradient: GradientKind,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub replicates: u64,
    /// Trace stride; 0 disables the trace.
    pub trace_every: u64,
    pub output: Option<PathBuf>,
    /// Known price used for coverage studies.
    pub reference: Option<f64>,
}

/// A table column: a variant, optionally with its own drift matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSpec {
    pub variant: Variant,
    pub drift: Option<DriftKind>,
}

impl ColumnSpec {
    pub fn label(&self) -> String {
        match self.drift {
            Some(d) => format!("{}@{}", self.variant, d.name()),
            None => self.variant.to_string(),
        }
    }
}

impl FromStr for ColumnSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (v, d) = match s.split_once('@') {
            Some((v, d)) => (v, Some(d.parse()?)),
            None => (s, None),
        };
        Ok(ColumnSpec {
            variant: v.parse()?,
            drift: d,
        })
    }
}

pub const DEFAULT_COLUMNS: [ColumnSpec; 3] = [
    ColumnSpec {
        variant: Variant::Crude,
        drift: None,
    },
    ColumnSpec {
        variant: Variant::Adis(AdisVariant::Xi2),
        drift: None,
    },
    ColumnSpec {
        variant: Variant::Adis(AdisVariant::Xi2Avg),
        drift: None,
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub payoff: PayoffConfig,
    pub algorithm: AlgorithmConfig,
    pub run: RunConfig,
    pub columns: Vec<ColumnSpec>,
}

/// The objects a configuration describes, freshly built.
pub struct Scenario {
    pub market: Arc<MarketModel>,
    pub payoff: Payoff,
    pub model: GaussianShiftModel,
}

impl ExperimentConfig {
    pub fn market(&self) -> Result<Arc<MarketModel>> {
        let m = &self.model;
        Ok(Arc::new(MarketModel::new(
            m.spots.clone(),
            m.vols.clone(),
            m.rate,
            m.rho,
            m.grid.clone(),
        )?))
    }

    pub fn payoff_spec(&self) -> Result<Payoff> {
        let p = &self.payoff;
        let payoff = match (p.kind, &p.barriers) {
            (PayoffKind::BasketCall, _) => Payoff::basket_call(p.weights.clone(), p.strike)?,
            (PayoffKind::DownOutBasketCall, Some(b)) => {
                Payoff::down_out_basket_call(p.weights.clone(), p.strike, b.clone())?
            }
            (PayoffKind::DownOutBasketCall, None) => {
                return Err(Error::invalid("barriers", "required for down-out-basket-call"))
            }
        };
        Ok(if p.discount { payoff } else { payoff.undiscounted() })
    }

    pub fn param_dim(&self, drift: DriftKind) -> usize {
        drift.param_dim(self.model.grid.len(), self.model.assets())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario_with(self.algorithm.drift)
    }

    pub fn scenario_with(&self, drift: DriftKind) -> Result<Scenario> {
        let market = self.market()?;
        let payoff = self.payoff_spec()?;
        let phi = market.payoff_fn(payoff.clone())?;
        let a = drift.matrix(&self.model.grid, self.model.assets())?;
        let model = GaussianShiftModel::new(phi, a, self.model.grid.len(), self.model.assets())?;
        Ok(Scenario { market, payoff, model })
    }

    /// Stochastic approximation settings for a parameter of dimension `dim`.
    /// `theta0` is broadcast when it was given as a single value.
    pub fn sa_settings(&self, dim: usize) -> Result<SaSettings> {
        let alg = &self.algorithm;
        let theta0 = match alg.theta0.len() {
            1 => vec![alg.theta0[0]; dim],
            k if k == dim => alg.theta0.clone(),
            k => {
                return Err(Error::DimensionMismatch {
                    what: "theta0",
                    expected: dim,
                    got: k,
                })
            }
        };
        let compacts = CompactSchedule::new(alg.r0, alg.growth)?;
        if !compacts.contains(0, &theta0) {
            return Err(Error::invalid(
                "theta0",
                format!("must lie in the first compact of radius {}", alg.r0),
            ));
        }
        if !(alg.tau.is_finite() && alg.tau > 0.0) {
            return Err(Error::invalid(
                "tau",
                format!("must be finite and > 0, got {}", alg.tau),
            ));
        }
        Ok(SaSettings {
            gains: GainSchedule::new(alg.gamma, alg.a)?,
            compacts,
            theta0,
            tau: alg.tau,
            normalization: alg.avg_normalize,
            level: alg.level,
        })
    }

    /// Canonical text form; parsing it yields an equal configuration.
    pub fn to_text(&self) -> String {
        fn list(v: &[f64]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
        let m = &self.model;
        let p = &self.payoff;
        let a = &self.algorithm;
        let r = &self.run;
        let mut s = String::new();
        s += "[model]\n";
        s += &format!(
            "spots = {}\nvols = {}\nrate = {}\nrho = {}\ngrid = {}\n",
            list(&m.spots),
            list(&m.vols),
            m.rate,
            m.rho,
            list(&m.grid)
        );
        s += "\n[payoff]\n";
        s += &format!(
            "kind = {}\nweights = {}\nstrike = {}\n",
            p.kind.name(),
            list(&p.weights),
            p.strike
        );
        if let Some(b) = &p.barriers {
            s += &format!("barriers = {}\n", list(b));
        }
        s += &format!("discount = {}\n", p.discount);
        s += "\n[algorithm]\n";
        s += &format!(
            "variant = {}\nn = {}\ngamma = {}\na = {}\ntau = {}\nr0 = {}\ngrowth = {}\ntheta0 = {}\ndrift = {}\navg-normalize = {}\ngradient = {}\nlevel = {}\n",
            a.variant,
            a.n,
            a.gamma,
            a.a,
            a.tau,
            a.r0,
            a.growth,
            list(&a.theta0),
            a.drift.name(),
            match a.avg_normalize {
                AverageNormalization::Verbatim => "verbatim",
                AverageNormalization::Count => "count",
            },
            match a.gradient {
                GradientKind::U1 => "u1",
                GradientKind::U2 => "u2",
            },
            a.level
        );
        s += "\n[run]\n";
        s += &format!(
            "seed = {}\nreplicates = {}\ntrace-every = {}\n",
            r.seed, r.replicates, r.trace_every
        );
        if let Some(o) = &r.output {
            s += &format!("output = {}\n", o.display());
        }
        if let Some(x) = r.reference {
            s += &format!("reference = {x}\n");
        }
        s += "\n[table]\n";
        s += &format!(
            "columns = {}\n",
            self.columns.iter().map(|c| c.label()).collect::<Vec<_>>().join(", ")
        );
        s
    }
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "model",
        &[
            "assets",
            "spots",
            "vols",
            "rate",
            "rho",
            "maturity",
            "steps",
            "steps-per-year",
            "grid",
        ],
    ),
    ("payoff", &["kind", "weights", "strike", "barriers", "discount"]),
    (
        "algorithm",
        &[
            "variant",
            "n",
            "gamma",
            "a",
            "tau",
            "r0",
            "growth",
            "theta0",
            "drift",
            "avg-normalize",
            "gradient",
            "level",
        ],
    ),
    ("run", &["seed", "replicates", "trace-every", "output", "reference"]),
    ("table", &["columns"]),
];

/// Collects raw entries and every violation found while reading them.
struct Reader {
    entries: BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Reader {
    fn lex(text: &str) -> Self {
        let mut r = Reader {
            entries: BTreeMap::new(),
            errors: Vec::new(),
        };
        let mut section: Option<String> = None;
        for (no, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let no = no + 1;
            if let Some(rest) = line.strip_prefix('[') {
                match rest.strip_suffix(']').map(str::trim) {
                    Some(name) if KEYS.iter().any(|(s, _)| *s == name) => section = Some(name.to_string()),
                    Some(name) => {
                        r.errors.push(format!("line {no}: unknown section `[{name}]`"));
                        section = None;
                    }
                    None => r.errors.push(format!("line {no}: malformed section header `{line}`")),
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                r.errors
                    .push(format!("line {no}: expected `key = value`, got `{line}`"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = &section else {
                r.errors.push(format!("line {no}: `{key}` is outside a known section"));
                continue;
            };
            let known = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            let path = format!("{sec}.{key}");
            if !known.contains(&key) {
                r.errors.push(format!("{path}: unknown key"));
            } else if r.entries.insert(path.clone(), value.to_string()).is_some() {
                r.errors.push(format!("{path}: duplicate key (line {no})"));
            }
        }
        r
    }

    fn raw(&self, path: &str) -> Option<&str> {
        self.entries.get(path).map(String::as_str)
    }

    fn fail(&mut self, path: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn parsed<T: FromStr>(&mut self, path: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(path)?.to_string();
        if raw.is_empty() {
            self.fail(path, "empty value");
            return None;
        }
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(path, format!("cannot parse `{raw}`: {e}"));
                None
            }
        }
    }

    fn required<T: FromStr>(&mut self, path: &str) -> Option<T>
    where
        T::Err: fmt::Display,
    {
        if self.raw(path).is_none() {
            self.fail(path, "missing required key");
            return None;
        }
        self.parsed(path)
    }

    fn list(&mut self, path: &str) -> Option<Vec<f64>> {
        let raw = self.raw(path)?.to_string();
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim) {
            match item.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.fail(path, format!("cannot parse `{item}` as a number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn check(&mut self, path: &str, ok: bool, msg: impl fmt::Display) -> bool {
        if !ok {
            self.fail(path, msg);
        }
        ok
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = line.find(['#', ';']).unwrap_or(line.len());
    &line[..cut]
}

fn broadcast(r: &mut Reader, path: &str, values: Vec<f64>, assets: usize) -> Vec<f64> {
    match values.len() {
        1 => vec![values[0]; assets],
        k if k == assets => values,
        k => {
            r.fail(path, format!("expected 1 or {assets} values, got {k}"));
            values
        }
    }
}

fn rho_bound(assets: usize) -> String {
    if assets > 1 {
        format!("(-1/{}, 1)", assets - 1)
    } else {
        "(-inf, 1]".to_string()
    }
}

/// Parses and fully validates a configuration, reporting every violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut r = Reader::lex(text);

    // model
    let spots = r.list("model.spots");
    if spots.is_none() && r.raw("model.spots").is_none() {
        r.fail("model.spots", "missing required key");
    }
    let assets_key: Option<usize> = r.parsed("model.assets");
    let assets = assets_key.or(spots.as_ref().map(Vec::len)).unwrap_or(1);
    r.check("model.assets", assets >= 1, "must be at least 1");
    let spots = spots
        .map(|s| broadcast(&mut r, "model.spots", s, assets))
        .unwrap_or_default();
    for s in &spots {
        if !(s.is_finite() && *s > 0.0) {
            r.fail("model.spots", format!("must be finite and > 0, got {s}"));
            break;
        }
    }
    let vols = match r.list("model.vols") {
        Some(v) => broadcast(&mut r, "model.vols", v, assets),
        None => {
            if r.raw("model.vols").is_none() {
                r.fail("model.vols", "missing required key");
            }
            Vec::new()
        }
    };
    for v in &vols {
        if !(v.is_finite() && *v >= 0.0) {
            r.fail("model.vols", format!("must be finite and >= 0, got {v}"));
            break;
        }
    }
    let rate: f64 = r.required("model.rate").unwrap_or(0.0);
    r.check("model.rate", rate.is_finite(), "must be finite");
    let rho: f64 = r.parsed("model.rho").unwrap_or(0.0);
    if cholesky_factor(assets.max(1), rho).is_err() {
        r.fail(
            "model.rho",
            format!("must lie in {} for {assets} assets, got {rho}", rho_bound(assets)),
        );
    }
    let grid = if let Some(grid) = r.list("model.grid") {
        for key in ["model.steps", "model.steps-per-year"] {
            if r.raw(key).is_some() {
                r.fail(key, "cannot be combined with model.grid");
            }
        }
        if let Some(t) = r.parsed::<f64>("model.maturity") {
            r.check(
                "model.maturity",
                grid.last() == Some(&t),
                "must equal the last grid date",
            );
        }
        if let Err(e) = crate::models::time_steps(&grid) {
            r.fail("model.grid", e);
        }
        grid
    } else {
        let maturity: Option<f64> = r.required("model.maturity");
        let maturity = maturity.filter(|t| {
            r.check(
                "model.maturity",
                t.is_finite() && *t > 0.0,
                format!("must be finite and > 0, got {t}"),
            )
        });
        let steps: Option<usize> = match (r.raw("model.steps").is_some(), r.raw("model.steps-per-year").is_some()) {
            (true, true) => {
                r.fail("model.steps-per-year", "cannot be combined with model.steps");
                None
            }
            (true, false) => r.parsed("model.steps"),
            (false, true) => {
                let spy: Option<f64> = r.parsed("model.steps-per-year");
                match (spy, maturity) {
                    (Some(spy), Some(t)) => {
                        let n = spy * t;
                        if r.check(
                            "model.steps-per-year",
                            (n - n.round()).abs() < 1e-9 && n.round() >= 1.0,
                            format!("steps-per-year * maturity = {n} is not a positive integer"),
                        ) {
                            Some(n.round() as usize)
                        } else {
                            None
                        }
                    }
                    _ => None,
                }
            }
            (false, false) => Some(1),
        };
        if let Some(0) = steps {
            r.fail("model.steps", "must be at least 1");
        }
        match (maturity, steps) {
            (Some(t), Some(n)) if n > 0 => MarketModel::uniform_grid(t, n),
            _ => Vec::new(),
        }
    };

    // payoff
    let kind: Option<PayoffKind> = r.required("payoff.kind");
    let weights = match r.list("payoff.weights") {
        Some(w) => broadcast(&mut r, "payoff.weights", w, assets),
        None => vec![1.0 / assets as f64; assets],
    };
    let strike: f64 = r.required("payoff.strike").unwrap_or(0.0);
    r.check(
        "payoff.strike",
        strike.is_finite(),
        format!("must be finite, got {strike}"),
    );
    let barriers = r
        .list("payoff.barriers")
        .map(|b| broadcast(&mut r, "payoff.barriers", b, assets));
    match (kind, &barriers) {
        (Some(PayoffKind::DownOutBasketCall), None) => r.fail("payoff.barriers", "required for down-out-basket-call"),
        (Some(PayoffKind::BasketCall), Some(_)) => r.fail("payoff.barriers", "only valid for down-out-basket-call"),
        (Some(PayoffKind::DownOutBasketCall), Some(b)) => {
            r.check(
                "payoff.barriers",
                b.iter().all(|l| l.is_finite() && *l >= 0.0),
                "must be finite and >= 0",
            );
            r.check(
                "payoff.weights",
                weights.iter().all(|w| *w >= 0.0),
                "must be >= 0 for a barrier basket",
            );
        }
        _ => {}
    }
    let discount: bool = r.parsed("payoff.discount").unwrap_or(true);

    // algorithm
    let variant: Option<Variant> = r.required("algorithm.variant");
    let n: u64 = r.required("algorithm.n").unwrap_or(0);
    if r.raw("algorithm.n").is_some() {
        r.check("algorithm.n", n >= 1, "must be at least 1");
    }
    let gamma: f64 = r.required("algorithm.gamma").unwrap_or(0.0);
    let a: f64 = r.parsed("algorithm.a").unwrap_or(GainSchedule::DEFAULT_EXPONENT);
    if let Err(e) = GainSchedule::new(gamma, a) {
        let key = if matches!(&e, Error::InvalidParameter { name: "gamma", .. }) {
            "algorithm.gamma"
        } else {
            "algorithm.a"
        };
        r.fail(key, reason(&e));
    }
    let tau: f64 = r.parsed("algorithm.tau").unwrap_or(1.0);
    r.check(
        "algorithm.tau",
        tau.is_finite() && tau > 0.0,
        format!("must be finite and > 0, got {tau}"),
    );
    let r0: f64 = r.parsed("algorithm.r0").unwrap_or(5.0);
    let growth: f64 = r.parsed("algorithm.growth").unwrap_or(2.0);
    if let Err(e) = CompactSchedule::new(r0, growth) {
        let key = if matches!(&e, Error::InvalidParameter { name: "r0", .. }) {
            "algorithm.r0"
        } else {
            "algorithm.growth"
        };
        r.fail(key, reason(&e));
    }
    let theta0 = r.list("algorithm.theta0").unwrap_or_else(|| vec![0.0]);
    let drift: DriftKind = r.parsed("algorithm.drift").unwrap_or_default();
    if drift == DriftKind::CameronMartin && assets != 1 {
        r.fail(
            "algorithm.drift",
            format!("cameron-martin needs a single asset, got {assets}"),
        );
    }
    let avg_normalize: AverageNormalization = r.parsed("algorithm.avg-normalize").unwrap_or_default();
    let gradient = match r.raw("algorithm.gradient") {
        None => GradientKind::U2,
        Some("u1") => GradientKind::U1,
        Some("u2") => GradientKind::U2,
        Some(other) => {
            let msg = format!("expected u1 or u2, got `{other}`");
            r.fail("algorithm.gradient", msg);
            GradientKind::U2
        }
    };
    let level: f64 = r.parsed("algorithm.level").unwrap_or(0.95);
    r.check(
        "algorithm.level",
        level > 0.0 && level < 1.0,
        format!("must lie in (0, 1), got {level}"),
    );

    // run
    let seed: u64 = r.parsed("run.seed").unwrap_or(0);
    let replicates: u64 = r.parsed("run.replicates").unwrap_or(1);
    r.check("run.replicates", replicates >= 1, "must be at least 1");
    let trace_every: u64 = r.parsed("run.trace-every").unwrap_or(0);
    let output = r.raw("run.output").filter(|s| !s.is_empty()).map(PathBuf::from);
    let reference: Option<f64> = r.parsed("run.reference");

    // table
    let columns = match r.raw("table.columns").map(str::to_string) {
        None => DEFAULT_COLUMNS.to_vec(),
        Some(raw) => {
            let mut cols = Vec::new();
            for item in raw.split(',').map(str::trim) {
                match item.parse::<ColumnSpec>() {
                    Ok(c) => cols.push(c),
                    Err(e) => r.fail("table.columns", e),
                }
            }
            cols
        }
    };

    let (Some(kind), Some(variant)) = (kind, variant) else {
        return Err(Error::InvalidConfig(r.errors));
    };
    let cfg = ExperimentConfig {
        model: ModelConfig {
            spots,
            vols,
            rate,
            rho,
            grid,
        },
        payoff: PayoffConfig {
            kind,
            weights,
            strike,
            barriers,
            discount,
        },
        algorithm: AlgorithmConfig {
            variant,
            n,
            gamma,
            a,
            tau,
            r0,
            growth,
            theta0,
            drift,
            avg_normalize,
            gradient,
            level,
        },
        run: RunConfig {
            seed,
            replicates,
            trace_every,
            output,
            reference,
        },
        columns,
    };
    if r.errors.is_empty() {
        // Cross-field checks that need the built objects.
        let dim = cfg.param_dim(drift);
        match cfg.algorithm.theta0.len() {
            1 => {}
            k if k == dim => {}
            k => r.fail("algorithm.theta0", format!("expected 1 or {dim} values, got {k}")),
        }
        if r.errors.is_empty() {
            if let Err(e) = cfg.sa_settings(dim) {
                r.fail("algorithm.theta0", reason(&e));
            }
            if let Err(e) = cfg.scenario() {
                r.fail(path_for(&e), reason(&e));
            }
            for c in &cfg.columns {
                if let Some(d) = c.drift {
                    if let Err(e) = cfg.scenario_with(d) {
                        r.fail("table.columns", format!("{}: {}", c.label(), reason(&e)));
                    }
                }
            }
        }
    }
    if r.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::InvalidConfig(r.errors))
    }
}

fn reason(e: &Error) -> String {
    match e {
        Error::InvalidParameter { reason, .. } => reason.clone(),
        other => other.to_string(),
    }
}

fn path_for(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { name: "weights", .. } => "payoff.weights",
        Error::InvalidParameter { name: "strike", .. } => "payoff.strike",
        Error::InvalidParameter { name: "barriers", .. } => "payoff.barriers",
        Error::InvalidParameter { name: "drift", .. } | Error::RankDeficient => "algorithm.drift",
        Error::NotPositiveDefinite { .. } => "model.rho",
        Error::InvalidGrid(_) => "model.grid",
        _ => "model",
    }
}

/// Reads and parses a configuration file.
pub fn load_config(path: impl AsRef<std::path::Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
