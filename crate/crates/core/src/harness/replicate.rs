//! Independent replicates of a configured run.
//!
//! Replicate `i` draws from stream `i` of the base seed, so replicate 0 is the
//! run performed by [`run_price`](super::run::run_price) and results do not
//! depend on the number of worker threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::{reference_price, run_variant};
use crate::error::{Error, Result};
use crate::estimator::EstimateReport;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub runs: u64,
    /// Successful reports in replicate order, with their replicate index.
    pub reports: Vec<(u64, EstimateReport)>,
    pub failures: Vec<(u64, Error)>,
    pub reference: Option<f64>,
    /// Fraction of successful replicates whose interval covers the reference.
    pub coverage: Option<f64>,
    pub mean_estimate: f64,
    pub estimate_sd: f64,
    pub sigma2_min: f64,
    pub sigma2_mean: f64,
    pub sigma2_max: f64,
    /// Final truncation count -> number of replicates.
    pub alpha_counts: BTreeMap<u64, u64>,
}

/// Runs `runs` replicates concurrently; failed replicates are reported without
/// stopping the batch.
pub fn run_replicates(cfg: &ExperimentConfig, runs: u64) -> Result<ReplicateSummary> {
    if runs == 0 {
        return Err(Error::invalid("runs", "need at least one replicate"));
    }
    let alg = &cfg.algorithm;
    let results: Vec<(u64, Result<EstimateReport>)> = (0..runs)
        .into_par_iter()
        .map(|i| {
            (
                i,
                run_variant(cfg, alg.variant, alg.drift, cfg.run.seed, i, 0).map(|a| a.report),
            )
        })
        .collect();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(rep) => reports.push((i, rep)),
            Err(e) => failures.push((i, e)),
        }
    }
    let reference = reference_price(cfg);
    let k = reports.len() as f64;
    let estimates: Vec<f64> = reports.iter().map(|(_, r)| r.estimate).collect();
    let sigma2: Vec<f64> = reports.iter().map(|(_, r)| r.variance).collect();
    let mean_estimate = estimates.iter().sum::<f64>() / k;
    let estimate_sd = if reports.len() > 1 {
        (estimates.iter().map(|e| (e - mean_estimate).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    let coverage = match reference {
        Some(p) if !reports.is_empty() => Some(reports.iter().filter(|(_, r)| r.ci().contains(p)).count() as f64 / k),
        _ => None,
    };
    let mut alpha_counts = BTreeMap::new();
    for (_, r) in &reports {
        *alpha_counts.entry(r.truncations).or_insert(0) += 1;
    }
    Ok(ReplicateSummary {
        runs,
        reports,
        failures,
        reference,
        coverage,
        mean_estimate,
        estimate_sd,
        sigma2_min: sigma2.iter().copied().fold(f64::INFINITY, f64::min),
        sigma2_mean: sigma2.iter().sum::<f64>() / k,
        sigma2_max: sigma2.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        alpha_counts,
    })
}

/// Key-value summary, one `key=value` pair per line.
pub fn format_summary(s: &ReplicateSummary) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("runs", &s.runs);
    kv("succeeded", &s.reports.len());
    kv("failed", &s.failures.len());
    kv("mean_estimate", &s.mean_estimate);
    kv("estimate_sd", &s.estimate_sd);
    if let Some(r) = s.reference {
        kv("reference", &r);
    }
    if let Some(c) = s.coverage {
        kv("coverage", &c);
    }
    kv("sigma2_min", &s.sigma2_min);
    kv("sigma2_mean", &s.sigma2_mean);
    kv("sigma2_max", &s.sigma2_max);
    let alpha = s
        .alpha_counts
        .iter()
        .map(|(a, c)| format!("{a}:{c}"))
        .collect::<Vec<_>>()
        .join(",");
    kv("alpha_counts", &alpha);
    for (i, e) in &s.failures {
        kv(&format!("failure.{i}"), &format!("{}: {e}", e.code()));
    }
    out
}
