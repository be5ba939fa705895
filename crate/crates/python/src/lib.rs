//! Python bindings: configurations, single runs, traces, replicates, tables
//! and the one-dimensional quadrature oracle.

use std::collections::BTreeMap;

use adaptive_mc::harness::{
    self, load_config, parse_config, run_replicates, run_table, run_variant, ExperimentConfig, QuadratureOracle,
    RunArtifacts, Variant,
};
use adaptive_mc::sa::{norm, window_start};
use adaptive_mc::{Error, GainSchedule};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(
    adaptive_mc_py,
    AdaptiveMcError,
    PyException,
    "Raised with `<code>: <message>`."
);

fn py_err(e: Error) -> PyErr {
    AdaptiveMcError::new_err(format!("{}: {e}", e.code()))
}

/// A parsed experiment configuration.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        parse_config(text).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_config(path).map(|inner| Self { inner }).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn variant(&self) -> String {
        self.inner.algorithm.variant.to_string()
    }

    #[setter]
    fn set_variant(&mut self, name: &str) -> PyResult<()> {
        self.inner.algorithm.variant = name.parse::<Variant>().map_err(AdaptiveMcError::new_err)?;
        Ok(())
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.algorithm.n
    }

    #[setter]
    fn set_n(&mut self, n: u64) {
        self.inner.algorithm.n = n;
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.algorithm.gamma
    }

    #[setter]
    fn set_gamma(&mut self, gamma: f64) {
        self.inner.algorithm.gamma = gamma;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.run.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.run.seed = seed;
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(variant={}, n={}, gamma={}, seed={})",
            self.inner.algorithm.variant, self.inner.algorithm.n, self.inner.algorithm.gamma, self.inner.run.seed
        )
    }
}

/// Result of one run.
#[pyclass(name = "Report", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyReport {
    variant: String,
    seed: u64,
    estimate: f64,
    std_error: f64,
    variance: f64,
    level: f64,
    ci_low: f64,
    ci_high: f64,
    ci_degenerate: bool,
    n: u64,
    payoff_evals: u64,
    truncations: u64,
    theta_final: Vec<f64>,
    theta_averaged: Option<Vec<f64>>,
    wall_clock_secs: f64,
}

impl From<&RunArtifacts> for PyReport {
    fn from(a: &RunArtifacts) -> Self {
        let r = &a.report;
        Self {
            variant: a.variant.to_string(),
            seed: a.seed,
            estimate: r.estimate,
            std_error: r.std_error(),
            variance: r.variance,
            level: r.level,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            ci_degenerate: r.degenerate_ci,
            n: r.n,
            payoff_evals: r.payoff_evals,
            truncations: r.truncations,
            theta_final: r.theta_final.clone(),
            theta_averaged: r.theta_averaged.clone(),
            wall_clock_secs: a.wall_clock_secs,
        }
    }
}

#[pymethods]
impl PyReport {
    #[getter]
    fn theta_norm(&self) -> f64 {
        norm(&self.theta_final)
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(variant={}, estimate={}, std_error={}, n={}, truncations={})",
            self.variant, self.estimate, self.std_error, self.n, self.truncations
        )
    }
}

fn run(py: Python<'_>, cfg: &PyConfig, seed: Option<u64>, trace_every: u64) -> PyResult<RunArtifacts> {
    let c = &cfg.inner;
    let seed = seed.unwrap_or(c.run.seed);
    py.detach(|| run_variant(c, c.algorithm.variant, c.algorithm.drift, seed, 0, trace_every))
        .map_err(py_err)
}

/// Runs the configured variant once.
#[pyfunction]
#[pyo3(signature = (config, seed=None))]
fn price(py: Python<'_>, config: &PyConfig, seed: Option<u64>) -> PyResult<PyReport> {
    Ok(PyReport::from(&run(py, config, seed, 0)?))
}

/// Runs once and returns the report with rows
/// `(iter, xi, sigma2, theta_norm, alpha, payoff_evals)` every `every` iterations.
#[pyfunction]
#[pyo3(signature = (config, every, seed=None))]
#[allow(clippy::type_complexity)]
fn trace(
    py: Python<'_>,
    config: &PyConfig,
    every: u64,
    seed: Option<u64>,
) -> PyResult<(PyReport, Vec<(u64, f64, f64, f64, u64, u64)>)> {
    if every == 0 {
        return Err(AdaptiveMcError::new_err("invalid_parameter: every must be at least 1"));
    }
    let art = run(py, config, seed, every)?;
    let rows = art
        .trace
        .iter()
        .map(|r| (r.iter, r.xi, r.sigma2, r.theta_norm, r.alpha, r.payoff_evals))
        .collect();
    Ok((PyReport::from(&art), rows))
}

/// Independent replicates; returns summary statistics as a dict.
#[pyfunction]
fn replicate(py: Python<'_>, config: &PyConfig, runs: u64) -> PyResult<BTreeMap<String, Py<PyAny>>> {
    let s = py.detach(|| run_replicates(&config.inner, runs)).map_err(py_err)?;
    let mut out = BTreeMap::new();
    out.insert("runs".into(), s.runs.into_pyobject(py)?.into_any().unbind());
    out.insert(
        "succeeded".into(),
        s.reports.len().into_pyobject(py)?.into_any().unbind(),
    );
    let estimates: Vec<f64> = s.reports.iter().map(|(_, r)| r.estimate).collect();
    out.insert("estimates".into(), estimates.into_pyobject(py)?.into_any().unbind());
    let failures: Vec<(u64, String)> = s
        .failures
        .iter()
        .map(|(i, e)| (*i, format!("{}: {e}", e.code())))
        .collect();
    out.insert("failures".into(), failures.into_pyobject(py)?.into_any().unbind());
    out.insert("reference".into(), s.reference.into_pyobject(py)?.into_any().unbind());
    out.insert("coverage".into(), s.coverage.into_pyobject(py)?.into_any().unbind());
    out.insert(
        "mean_estimate".into(),
        s.mean_estimate.into_pyobject(py)?.into_any().unbind(),
    );
    out.insert(
        "estimate_sd".into(),
        s.estimate_sd.into_pyobject(py)?.into_any().unbind(),
    );
    out.insert(
        "sigma2_mean".into(),
        s.sigma2_mean.into_pyobject(py)?.into_any().unbind(),
    );
    out.insert(
        "alpha_counts".into(),
        s.alpha_counts.into_pyobject(py)?.into_any().unbind(),
    );
    Ok(out)
}

/// Comparison table over scenarios, as `"markdown"` or `"csv"` text.
#[pyfunction]
#[pyo3(signature = (configs, format="markdown"))]
fn table(py: Python<'_>, configs: Vec<PyConfig>, format: &str) -> PyResult<String> {
    let cfgs: Vec<ExperimentConfig> = configs.into_iter().map(|c| c.inner).collect();
    let t = py.detach(|| run_table(&cfgs)).map_err(py_err)?;
    match format {
        "markdown" => Ok(t.to_markdown()),
        "csv" => t.to_csv().map_err(py_err),
        other => Err(AdaptiveMcError::new_err(format!(
            "invalid_parameter: unknown format `{other}`"
        ))),
    }
}

/// Closed-form price for single-asset, single-date calls, else `run.reference`.
#[pyfunction]
fn reference_price(config: &PyConfig) -> Option<f64> {
    harness::reference_price(&config.inner)
}

#[pyfunction]
fn bs_call_price(spot: f64, strike: f64, rate: f64, vol: f64, maturity: f64) -> f64 {
    adaptive_mc::bs_call_price(spot, strike, rate, vol, maturity)
}

/// First index of the averaging window at step `n`.
#[pyfunction]
#[pyo3(signature = (n, gamma, a=0.75, tau=1.0))]
fn averaging_window_start(n: u64, gamma: f64, a: f64, tau: f64) -> PyResult<u64> {
    let gs = GainSchedule::new(gamma, a).map_err(py_err)?;
    Ok(window_start(&gs, tau, n))
}

/// Quadrature oracle for a configuration with one Gaussian input.
#[pyclass(name = "Oracle", frozen)]
pub struct PyOracle {
    inner: QuadratureOracle,
}

#[pymethods]
impl PyOracle {
    #[new]
    fn new(config: &PyConfig) -> PyResult<Self> {
        let s = config.inner.scenario().map_err(py_err)?;
        let inner = QuadratureOracle::for_market(&s.model, &s.market, &s.payoff).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn v(&self, theta: f64) -> f64 {
        self.inner.v(theta)
    }

    fn variance(&self, theta: f64) -> f64 {
        self.inner.variance(theta)
    }

    #[pyo3(signature = (theta, h=1e-4))]
    fn v_derivative(&self, theta: f64, h: f64) -> f64 {
        self.inner.v_derivative(theta, h)
    }

    fn theta_star(&self) -> f64 {
        self.inner.theta_star()
    }
}

#[pymodule]
fn adaptive_mc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AdaptiveMcError", m.py().get_type::<AdaptiveMcError>())?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyOracle>()?;
    m.add_function(wrap_pyfunction!(price, m)?)?;
    m.add_function(wrap_pyfunction!(trace, m)?)?;
    m.add_function(wrap_pyfunction!(replicate, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    m.add_function(wrap_pyfunction!(reference_price, m)?)?;
    m.add_function(wrap_pyfunction!(bs_call_price, m)?)?;
    m.add_function(wrap_pyfunction!(averaging_window_start, m)?)?;
    Ok(())
}
