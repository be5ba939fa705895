use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adaptive_mc::harness::{
    format_report, format_summary, load_config, load_config_dir, run_price, run_replicates, run_table, write_trace,
    ExperimentConfig,
};
use adaptive_mc::{AverageNormalization, Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Adaptive importance sampling Monte Carlo pricer.
#[derive(Debug, Parser)]
#[command(name = "adaptive-mc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Override `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (report, table or trace depending on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override `algorithm.avg-normalize`.
    #[arg(long, global = true, value_parser = parse_normalization)]
    avg_normalize: Option<AverageNormalization>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured algorithm once and print a key-value report.
    Price { config: PathBuf },
    /// Build a comparison table from every config file of a directory.
    Table {
        config_dir: PathBuf,
        /// Defaults to markdown, or to the `--out` file extension.
        #[arg(long, value_enum)]
        format: Option<TableFormat>,
    },
    /// Run independent replicates and print coverage and spread statistics.
    Replicate {
        config: PathBuf,
        #[arg(long)]
        runs: u64,
    },
    /// Run once and emit the per-iteration trace as CSV.
    Trace {
        config: PathBuf,
        #[arg(long)]
        every: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Markdown,
}

fn parse_normalization(s: &str) -> std::result::Result<AverageNormalization, String> {
    s.parse()
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(m) = self.avg_normalize {
            cfg.algorithm.avg_normalize = m;
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.display().to_string(),
            reason: e.to_string(),
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Error::Io {
                path: "stdout".into(),
                reason: e.to_string(),
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let out = common.out.as_deref();
    match &cli.command {
        Command::Price { config } => {
            let mut cfg = load_config(config)?;
            common.apply(&mut cfg);
            let art = run_price(&cfg)?;
            emit(out, &format_report(&art))
        }
        Command::Table { config_dir, format } => {
            let mut cfgs: Vec<ExperimentConfig> = load_config_dir(config_dir)?.into_iter().map(|(_, c)| c).collect();
            for c in &mut cfgs {
                common.apply(c);
            }
            let table = run_table(&cfgs)?;
            let csv = match format {
                Some(f) => matches!(f, TableFormat::Csv),
                None => out.and_then(|p| p.extension()).is_some_and(|e| e == "csv"),
            };
            let text = if csv { table.to_csv()? } else { table.to_markdown() };
            emit(out, &text)
        }
        Command::Replicate { config, runs } => {
            let mut cfg = load_config(config)?;
            common.apply(&mut cfg);
            let summary = run_replicates(&cfg, *runs)?;
            emit(out, &format_summary(&summary))
        }
        Command::Trace { config, every } => {
            if *every == 0 {
                return Err(Error::InvalidParameter {
                    name: "every",
                    reason: "must be at least 1".into(),
                });
            }
            let mut cfg = load_config(config)?;
            common.apply(&mut cfg);
            cfg.run.trace_every = *every;
            let dest = out.map(Path::to_path_buf).or_else(|| cfg.run.output.clone());
            cfg.run.output = None;
            let art = run_price(&cfg)?;
            let mut buf = Vec::new();
            write_trace(&mut buf, &art.trace)?;
            let csv = String::from_utf8_lossy(&buf);
            match dest {
                Some(p) => {
                    emit(Some(&p), &csv)?;
                    emit(None, &format!("{}trace={}\n", format_report(&art), p.display()))
                }
                None => emit(None, &csv),
            }
        }
    }
}

/// One line on stderr: `error: code=<code> message=<text>`.
fn report_error(code: &str, message: &str) {
    let message = message.replace('\n', " ");
    eprintln!("error: code={code} message={message}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            report_error("usage", e.to_string().lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.code(), &e.to_string());
            ExitCode::from(match e.code() {
                "invalid_config" | "io" | "invalid_parameter" => 2,
                _ => 1,
            })
        }
    }
}
