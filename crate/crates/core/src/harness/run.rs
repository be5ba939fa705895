//! Single runs driven by a configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use super::config::{DriftKind, ExperimentConfig, PayoffKind, Scenario, Variant};
use super::trace::write_trace_file;
use crate::error::{Error, Result};
use crate::estimator::{adis_run, crude_run, nadis_run, EstimateReport, EveryK, NoTrace, TraceRecord, TraceSink};
use crate::market::bs_call_price;
use crate::rng::NoiseStream;
use crate::sa::norm;

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub variant: Variant,
    pub seed: u64,
    pub report: EstimateReport,
    /// Records kept at the configured stride (empty when tracing is off).
    pub trace: Vec<TraceRecord>,
    pub trace_path: Option<PathBuf>,
    pub wall_clock_secs: f64,
    pub config_echo: String,
}

/// Runs `variant` on a built scenario with the given stream.
pub fn execute(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    variant: Variant,
    stream: &mut NoiseStream,
    trace: &mut dyn TraceSink,
) -> Result<EstimateReport> {
    let model = &scenario.model;
    let sa = cfg.sa_settings(model.param_dim())?;
    let n = cfg.algorithm.n;
    match variant {
        Variant::Crude => crude_run(
            &model.with_gradient(Default::default()),
            &sa.theta0,
            sa.level,
            n,
            stream,
            trace,
        ),
        Variant::Adis(v) => adis_run(
            &model.with_gradient(v.gradient()),
            &sa,
            v.theta_source(),
            n,
            stream,
            trace,
        ),
        Variant::Nadis(plug) => nadis_run(
            &model.with_gradient(cfg.algorithm.gradient),
            &sa,
            plug,
            n,
            stream,
            trace,
        ),
    }
}

fn context(cfg: &ExperimentConfig, variant: Variant, drift: DriftKind, seed: u64, replicate: u64) -> String {
    format!(
        "variant={variant} drift={} n={} gamma={} seed={seed} replicate={replicate}",
        drift.name(),
        cfg.algorithm.n,
        cfg.algorithm.gamma
    )
}

/// Runs `variant` with drift `drift` on replicate stream `replicate` of `seed`.
pub fn run_variant(
    cfg: &ExperimentConfig,
    variant: Variant,
    drift: DriftKind,
    seed: u64,
    replicate: u64,
    trace_every: u64,
) -> Result<RunArtifacts> {
    let wrap = |e: Error| Error::InRun {
        context: context(cfg, variant, drift, seed, replicate),
        source: Box::new(e),
    };
    let scenario = cfg.scenario_with(drift).map_err(wrap)?;
    let mut stream = NoiseStream::for_replicate(seed, replicate);
    let start = Instant::now();
    let (report, trace) = if trace_every > 0 {
        let mut sink = EveryK::new(trace_every);
        let r = execute(cfg, &scenario, variant, &mut stream, &mut sink).map_err(wrap)?;
        (r, sink.records)
    } else {
        (
            execute(cfg, &scenario, variant, &mut stream, &mut NoTrace).map_err(wrap)?,
            Vec::new(),
        )
    };
    Ok(RunArtifacts {
        variant,
        seed,
        report,
        trace,
        trace_path: None,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        config_echo: cfg.to_text(),
    })
}

/// Runs the configured algorithm on replicate stream 0 of `run.seed` and, when
/// `run.trace-every > 0` and `run.output` is set, writes the trace there.
pub fn run_price(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    let mut art = run_variant(
        cfg,
        cfg.algorithm.variant,
        cfg.algorithm.drift,
        cfg.run.seed,
        0,
        cfg.run.trace_every,
    )?;
    if let (true, Some(path)) = (cfg.run.trace_every > 0, &cfg.run.output) {
        write_trace_file(path, &art.trace)?;
        art.trace_path = Some(path.clone());
    }
    Ok(art)
}

/// Closed-form price when the configuration is a single-asset, single-date
/// call, otherwise `run.reference`.
pub fn reference_price(cfg: &ExperimentConfig) -> Option<f64> {
    if let Some(r) = cfg.run.reference {
        return Some(r);
    }
    let m = &cfg.model;
    let p = &cfg.payoff;
    if m.assets() != 1 || m.grid.len() != 1 || p.kind != PayoffKind::BasketCall || p.weights[0] <= 0.0 {
        return None;
    }
    let w = p.weights[0];
    let t = m.maturity();
    let discounted = w * bs_call_price(m.spots[0], p.strike / w, m.rate, m.vols[0], t);
    Some(if p.discount {
        discounted
    } else {
        discounted * (m.rate * t).exp()
    })
}

/// Key-value report, one `key=value` pair per line.
pub fn format_report(art: &RunArtifacts) -> String {
    let r = &art.report;
    let mut s = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("variant", &art.variant);
    kv("seed", &art.seed);
    kv("n", &r.n);
    kv("estimate", &r.estimate);
    kv("std_error", &r.std_error());
    kv("variance", &r.variance);
    kv("ci_level", &r.level);
    kv("ci_low", &r.ci_low);
    kv("ci_high", &r.ci_high);
    kv("ci_degenerate", &r.degenerate_ci);
    kv("payoff_evals", &r.payoff_evals);
    kv("truncations", &r.truncations);
    kv("theta_norm", &norm(&r.theta_final));
    if let Some(avg) = &r.theta_averaged {
        kv("theta_averaged_norm", &norm(avg));
    }
    kv("wall_clock_s", &format!("{:.6}", art.wall_clock_secs));
    if let Some(p) = &art.trace_path {
        kv("trace", &p.display());
    }
    s
}
