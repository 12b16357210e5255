//! The run file: one row per trace sample, preceded by a schema comment.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};
use somaop::engine::Trace;

use crate::CliError;

pub const SCHEMA_LINE: &str = "# somaop-runs v1";
pub const COLUMNS: [&str; 6] = ["algorithm", "seed", "sample", "nclo", "utility", "wall_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: String,
    /// Seed of the instance the run solved.
    pub seed: u64,
    pub sample: usize,
    pub nclo: u64,
    pub utility: f64,
    /// Wall time of the whole run, zero unless timing was requested.
    pub wall_ms: u64,
}

/// All samples of one (algorithm, instance) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub algorithm: String,
    pub seed: u64,
    pub trace: Trace,
}

pub fn write_records(out: impl Write, records: &[RunRecord]) -> Result<(), CliError> {
    let mut out = out;
    writeln!(out, "{SCHEMA_LINE}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(input: impl Read) -> Result<Vec<RunRecord>, CliError> {
    let mut input = BufReader::new(input);
    let mut first = String::new();
    input.read_line(&mut first)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(CliError::Schema(format!("expected `{SCHEMA_LINE}` on the first line")));
    }
    let mut r = csv::Reader::from_reader(input);
    if r.headers()? != COLUMNS.as_slice() {
        return Err(CliError::Schema(format!("expected columns {}", COLUMNS.join(","))));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Groups rows into runs. Each run is a contiguous block of samples numbered
/// from zero, with a nondecreasing counter, and no (algorithm, seed) pair may
/// appear twice.
pub fn split_runs(records: &[RunRecord]) -> Result<Vec<Run>, CliError> {
    let mut runs: Vec<Run> = Vec::new();
    let mut seen = HashSet::new();
    for (line, r) in records.iter().enumerate() {
        let continues = runs.last().is_some_and(|run| {
            run.algorithm == r.algorithm && run.seed == r.seed && r.sample == run.trace.len()
        });
        if continues {
            let run = runs.last_mut().expect("checked above");
            if run.trace.last().is_some_and(|s| s.nclo > r.nclo) {
                return Err(CliError::Schema(format!("row {}: counter decreases", line + 1)));
            }
            run.trace.push(r.nclo, r.utility);
            continue;
        }
        if r.sample != 0 {
            return Err(CliError::Schema(format!("row {}: run does not start at sample 0", line + 1)));
        }
        if !seen.insert((r.algorithm.clone(), r.seed)) {
            return Err(CliError::Schema(format!(
                "row {}: {} on seed {} appears twice",
                line + 1,
                r.algorithm,
                r.seed
            )));
        }
        let mut trace = Trace::default();
        trace.push(r.nclo, r.utility);
        runs.push(Run { algorithm: r.algorithm.clone(), seed: r.seed, trace });
    }
    Ok(runs)
}
