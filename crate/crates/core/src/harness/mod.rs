//! Configuration, runs, tables, replicate studies and deterministic oracles.

pub mod config;
pub mod quadrature;
pub mod replicate;
pub mod run;
pub mod table;
pub mod trace;

pub use config::{load_config, parse_config, ColumnSpec, DriftKind, ExperimentConfig, Scenario, Variant};
pub use quadrature::QuadratureOracle;
pub use replicate::{format_summary, run_replicates, ReplicateSummary};
pub use run::{execute, format_report, reference_price, run_price, run_variant, RunArtifacts};
pub use table::{load_config_dir, run_table, Table};
pub use trace::{read_trace, read_trace_file, write_trace, write_trace_file, TRACE_HEADER};
