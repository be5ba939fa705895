//! Per-iteration trace files.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimator::TraceRecord;

pub const TRACE_HEADER: [&str; 6] = ["iter", "xi", "sigma2", "theta_norm", "alpha", "payoff_evals"];

/// Writes records as CSV. Floats use the shortest representation that parses
/// back to the same value, so [`read_trace`] recovers the records exactly.
pub fn write_trace<W: Write>(out: W, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| Error::io("trace", e);
    w.write_record(TRACE_HEADER).map_err(wrap)?;
    for r in records {
        w.write_record([
            r.iter.to_string(),
            r.xi.to_string(),
            r.sigma2.to_string(),
            r.theta_norm.to_string(),
            r.alpha.to_string(),
            r.payoff_evals.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io("trace", e))
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let bad = |e: &dyn std::fmt::Display| Error::io("trace", e);
    let headers = rd.headers().map_err(|e| bad(&e))?;
    if headers.iter().ne(TRACE_HEADER) {
        return Err(Error::io(
            "trace",
            format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        ));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| bad(&e))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let f = |i: usize| field(i).parse::<f64>().map_err(|e| bad(&e));
        let u = |i: usize| field(i).parse::<u64>().map_err(|e| bad(&e));
        out.push(TraceRecord {
            iter: u(0)?,
            xi: f(1)?,
            sigma2: f(2)?,
            theta_norm: f(3)?,
            alpha: u(4)?,
            payoff_evals: u(5)?,
        });
    }
    Ok(out)
}

pub fn write_trace_file(path: &Path, records: &[TraceRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(std::io::BufWriter::new(file), records)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(std::io::BufReader::new(file))
}
