//! Aggregation of a run file. Everything here is a pure function of the rows.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::algorithm::parse_label;
use crate::plot;
use crate::{split_runs, CliError, Run, RunRecord};

/// Equal-width counter buckets per curve.
pub const BUCKETS: usize = 100;
/// Fraction of the final utility used for the time-to-quality column.
pub const REACH: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: String,
    pub runs: usize,
    pub mean_final: f64,
    /// Population variance of the final utilities.
    pub variance_final: f64,
    /// Mean counter at which a run first reaches [`REACH`] of its own final
    /// utility.
    pub mean_nclo_to_reach: Option<f64>,
    /// Mean utility per bucket, each run carrying its last sample forward.
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    PC,
    PA,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::PC => "p_c",
            Level::PA => "p_a",
        }
    }

    fn other(self) -> Level {
        match self {
            Level::PC => Level::PA,
            Level::PA => Level::PC,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub p: f64,
    pub runs: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Final utility of one algorithm as one knowledge level varies while the
/// other stays at `fixed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub algorithm: String,
    pub level: Level,
    pub fixed: f64,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub max_nclo: u64,
    /// Upper counter edge of every bucket.
    pub edges: Vec<f64>,
    pub summaries: Vec<Summary>,
    pub sweeps: Vec<Sweep>,
}

fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

fn carried(run: &Run, edge: f64) -> f64 {
    let s = &run.trace.samples;
    s.iter().take_while(|x| x.nclo as f64 <= edge).last().unwrap_or(&s[0]).utility
}

fn summarize(algorithm: &str, runs: &[&Run], edges: &[f64]) -> Summary {
    let finals: Vec<f64> = runs.iter().map(|r| r.trace.final_utility()).collect();
    let (mean_final, variance_final) = mean_variance(&finals);
    let reach: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.trace.nclo_to_reach(REACH))
        .map(|n| n as f64)
        .collect();
    let curve = edges
        .iter()
        .map(|&e| runs.iter().map(|r| carried(r, e)).sum::<f64>() / runs.len() as f64)
        .collect();
    Summary {
        algorithm: algorithm.to_owned(),
        runs: runs.len(),
        mean_final,
        variance_final,
        mean_nclo_to_reach: (!reach.is_empty()).then(|| mean_variance(&reach).0),
        curve,
    }
}

fn sweeps(summaries: &[Summary]) -> Vec<Sweep> {
    let leveled: Vec<(&str, [f64; 2], &Summary)> = summaries
        .iter()
        .filter_map(|s| {
            let (base, c) = parse_label(&s.algorithm);
            c.map(|c| (base, [c.p_c, c.p_a], s))
        })
        .collect();
    let mut out = Vec::new();
    for level in [Level::PC, Level::PA] {
        let (vary, hold) = match level {
            Level::PC => (0, 1),
            Level::PA => (1, 0),
        };
        let mut groups: Vec<(&str, f64)> = Vec::new();
        for &(base, ps, _) in &leveled {
            if !groups.contains(&(base, ps[hold])) {
                groups.push((base, ps[hold]));
            }
        }
        for (base, fixed) in groups {
            let mut points: Vec<SweepPoint> = leveled
                .iter()
                .filter(|(b, ps, _)| *b == base && ps[hold] == fixed)
                .map(|(_, ps, s)| SweepPoint {
                    p: ps[vary],
                    runs: s.runs,
                    mean: s.mean_final,
                    variance: s.variance_final,
                })
                .collect();
            if points.len() < 2 {
                continue;
            }
            points.sort_by(|a, b| a.p.total_cmp(&b.p));
            out.push(Sweep { algorithm: base.to_owned(), level, fixed, points });
        }
    }
    out
}

pub fn build_report(records: &[RunRecord]) -> Result<Report, CliError> {
    if records.is_empty() {
        return Err(CliError::EmptyCsv);
    }
    let runs = split_runs(records)?;
    let max_nclo = records.iter().map(|r| r.nclo).max().unwrap_or(0);
    let edges: Vec<f64> =
        (1..=BUCKETS).map(|b| max_nclo as f64 * b as f64 / BUCKETS as f64).collect();
    let mut names: Vec<&str> = Vec::new();
    for r in &runs {
        if !names.contains(&r.algorithm.as_str()) {
            names.push(&r.algorithm);
        }
    }
    let summaries: Vec<Summary> = names
        .iter()
        .map(|name| {
            let mine: Vec<&Run> = runs.iter().filter(|r| r.algorithm == *name).collect();
            summarize(name, &mine, &edges)
        })
        .collect();
    let sweeps = sweeps(&summaries);
    Ok(Report { max_nclo, edges, summaries, sweeps })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

impl Sweep {
    pub fn file_stem(&self) -> String {
        format!(
            "sweep-{}-{}-at-{}-{}",
            self.algorithm,
            self.level.name(),
            self.level.other().name(),
            self.fixed
        )
    }
}

impl Report {
    pub fn summary(&self, algorithm: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.algorithm == algorithm)
    }

    pub fn sweep(&self, algorithm: &str, level: Level, fixed: f64) -> Option<&Sweep> {
        self.sweeps
            .iter()
            .find(|s| s.algorithm == algorithm && s.level == level && s.fixed == fixed)
    }

    /// Plain-text tables for the terminal.
    pub fn table(&self) -> String {
        let mut t = String::new();
        let _ = writeln!(t, "{:<28} {:>5} {:>14} {:>14} {:>14}", "algorithm", "runs", "mean final", "variance", "nclo to 95%");
        for s in &self.summaries {
            let reach = s.mean_nclo_to_reach.map_or_else(|| "-".into(), |v| format!("{v:.0}"));
            let _ = writeln!(
                t,
                "{:<28} {:>5} {:>14.3} {:>14.3} {:>14}",
                s.algorithm, s.runs, s.mean_final, s.variance_final, reach
            );
        }
        for sw in &self.sweeps {
            let _ = writeln!(t, "\n{} over {} ({} = {})", sw.algorithm, sw.level.name(), sw.level.other().name(), sw.fixed);
            for p in &sw.points {
                let _ = writeln!(t, "  {:<6} {:>14.3} {:>14.3}", p.p, p.mean, p.variance);
            }
        }
        t
    }

    fn summary_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algorithm", "runs", "mean_final", "variance_final", "mean_nclo_to_95"])?;
        for s in &self.summaries {
            w.write_record([
                s.algorithm.clone(),
                s.runs.to_string(),
                s.mean_final.to_string(),
                s.variance_final.to_string(),
                opt(s.mean_nclo_to_reach),
            ])?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    fn curves_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = ["bucket".to_owned(), "nclo".to_owned()]
            .into_iter()
            .chain(self.summaries.iter().map(|s| s.algorithm.clone()));
        w.write_record(header)?;
        for (b, edge) in self.edges.iter().enumerate() {
            let row = [b.to_string(), edge.to_string()]
                .into_iter()
                .chain(self.summaries.iter().map(|s| s.curve[b].to_string()));
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    fn sweeps_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["algorithm", "level", "fixed", "p", "runs", "mean_final", "variance_final"])?;
        for sw in &self.sweeps {
            for p in &sw.points {
                w.write_record([
                    sw.algorithm.clone(),
                    sw.level.name().to_owned(),
                    sw.fixed.to_string(),
                    p.p.to_string(),
                    p.runs.to_string(),
                    p.mean.to_string(),
                    p.variance.to_string(),
                ])?;
            }
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }

    /// Writes the tables and plots into `dir` and returns the file paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, bytes) in [
            ("summary.csv", self.summary_csv()?),
            ("curves.csv", self.curves_csv()?),
            ("sweeps.csv", self.sweeps_csv()?),
        ] {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            written.push(path);
        }
        let path = dir.join("utility-vs-nclo.svg");
        plot::curves(self, &path)?;
        written.push(path);
        for sw in &self.sweeps {
            let path = dir.join(format!("{}.svg", sw.file_stem()));
            plot::sweep(sw, &path)?;
            written.push(path);
        }
        Ok(written)
    }
}
