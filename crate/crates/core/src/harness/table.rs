//! Comparison tables: one row per scenario, one group of columns per variant.

use std::path::{Path, PathBuf};

use super::config::{load_config, ColumnSpec, ExperimentConfig, Variant};
use super::run::run_variant;
use crate::error::{Error, Result};
use crate::estimator::AdisVariant;

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub column: ColumnSpec,
    pub estimate: f64,
    pub variance: f64,
    pub payoff_evals: u64,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub rho: f64,
    pub strike: f64,
    pub gamma: f64,
    /// Estimate of the `adis-xi2` column, or of the first column without one.
    pub price: f64,
    pub cells: Vec<TableCell>,
}

impl TableRow {
    pub fn cell(&self, label: &str) -> Option<&TableCell> {
        self.cells.iter().find(|c| c.column.label() == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<ColumnSpec>,
    pub rows: Vec<TableRow>,
}

fn var_header(c: &ColumnSpec) -> String {
    match c.variant {
        Variant::Crude if c.drift.is_none() => "Var MC".to_string(),
        _ => format!("Var {}", c.label()),
    }
}

impl Table {
    pub fn headers(&self) -> Vec<String> {
        let mut h: Vec<String> = ["rho", "K", "gamma", "Price"].iter().map(|s| s.to_string()).collect();
        h.extend(self.columns.iter().map(var_header));
        h.extend(self.columns.iter().map(|c| format!("evals {}", c.label())));
        h.extend(self.columns.iter().map(|c| format!("secs {}", c.label())));
        h
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![
                    r.rho.to_string(),
                    r.strike.to_string(),
                    r.gamma.to_string(),
                    format!("{:.4}", r.price),
                ];
                v.extend(r.cells.iter().map(|c| format!("{:.4}", c.variance)));
                v.extend(r.cells.iter().map(|c| c.payoff_evals.to_string()));
                v.extend(r.cells.iter().map(|c| format!("{:.3}", c.wall_clock_secs)));
                v
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let wrap = |e: csv::Error| Error::io("table", e);
        w.write_record(self.headers()).map_err(wrap)?;
        for row in self.cells() {
            w.write_record(row).map_err(wrap)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("table", e))?;
        String::from_utf8(bytes).map_err(|e| Error::io("table", e))
    }

    pub fn to_markdown(&self) -> String {
        let headers = self.headers();
        let mut s = format!("| {} |\n", headers.join(" | "));
        s += &format!("|{}\n", "---|".repeat(headers.len()));
        for row in self.cells() {
            s += &format!("| {} |\n", row.join(" | "));
        }
        s
    }
}

/// Runs every column of every scenario. All runs of a scenario use replicate
/// stream 0 of its seed, so the columns share their Gaussian draws.
pub fn run_table(configs: &[ExperimentConfig]) -> Result<Table> {
    let first = configs
        .first()
        .ok_or_else(|| Error::invalid("configs", "need at least one scenario"))?;
    if let Some(c) = configs.iter().find(|c| c.algorithm.n != first.algorithm.n) {
        return Err(Error::invalid(
            "n",
            format!(
                "scenarios must share n, got {} and {}",
                first.algorithm.n, c.algorithm.n
            ),
        ));
    }
    if let Some(c) = configs.iter().find(|c| c.columns != first.columns) {
        let labels = |c: &ExperimentConfig| c.columns.iter().map(ColumnSpec::label).collect::<Vec<_>>().join(",");
        return Err(Error::invalid(
            "columns",
            format!(
                "scenarios must share columns, got [{}] and [{}]",
                labels(first),
                labels(c)
            ),
        ));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        let mut cells = Vec::with_capacity(cfg.columns.len());
        for col in &cfg.columns {
            let drift = col.drift.unwrap_or(cfg.algorithm.drift);
            let art = run_variant(cfg, col.variant, drift, cfg.run.seed, 0, 0)?;
            cells.push(TableCell {
                column: *col,
                estimate: art.report.estimate,
                variance: art.report.variance,
                payoff_evals: art.report.payoff_evals,
                wall_clock_secs: art.wall_clock_secs,
            });
        }
        let xi2 = Variant::Adis(AdisVariant::Xi2);
        let price = cells
            .iter()
            .find(|c| c.column.variant == xi2 && c.column.drift.is_none())
            .or_else(|| cells.iter().find(|c| c.column.variant == xi2))
            .unwrap_or(&cells[0])
            .estimate;
        rows.push(TableRow {
            rho: cfg.model.rho,
            strike: cfg.payoff.strike,
            gamma: cfg.algorithm.gamma,
            price,
            cells,
        });
    }
    Ok(Table {
        columns: first.columns.clone(),
        rows,
    })
}

/// Configuration files (`*.cfg`, `*.ini`, `*.conf`) of a directory, sorted by name.
pub fn load_config_dir(dir: &Path) -> Result<Vec<(PathBuf, ExperimentConfig)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if path.is_file() && matches!(ext, "cfg" | "ini" | "conf") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::io(dir, "no *.cfg, *.ini or *.conf files"));
    }
    paths
        .into_iter()
        .map(|p| {
            let cfg = load_config(&p).map_err(|e| Error::InRun {
                context: p.display().to_string(),
                source: Box::new(e),
            })?;
            Ok((p, cfg))
        })
        .collect()
}
