use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use somaop::baselines::{run_centralized_greedy, run_dgs_oneshot_scored};
use somaop::dcop::{run_dsa_scored, DcopConfig};
use somaop::dsrm::{run_dsrm_scored, BidMode, DsrmConfig};
use somaop::engine::Trace;
use somaop::model::{global_utility, Solution};
use somaop::rpa::run_rpa_scored;
use somaop::scenarios::{mci_utility, Instance};

use crate::{Algorithm, CliError, ExperimentConfig, RunRecord, RunSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall time per run. Off by default so that reruns are
    /// byte-identical.
    pub wall_time: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

/// Solves one instance with one algorithm. Samples are scored with the
/// instance's reported utility.
pub fn solve(inst: &Instance, spec: &RunSpec, config: &ExperimentConfig) -> Result<Trace, CliError> {
    let mci = inst.as_mci();
    let p = &inst.problem;
    let score = |s: &Solution| match &mci {
        Some(m) => mci_utility(s, m),
        None => global_utility(p, s),
    };
    let trace = match spec.algorithm {
        Algorithm::Rpa => run_rpa_scored(p, &config.rpa, score)?.trace,
        Algorithm::DsrmSimple | Algorithm::DsrmTruncated => {
            let bid_mode = if spec.algorithm == Algorithm::DsrmSimple {
                BidMode::Simple
            } else {
                BidMode::Truncated
            };
            run_dsrm_scored(p, &DsrmConfig { bid_mode, ..config.dsrm }, score)?.trace
        }
        Algorithm::Dgs => run_dgs_oneshot_scored(p, score)?.trace,
        Algorithm::Greedy => {
            let mut t = Trace::default();
            t.push(0, score(&run_centralized_greedy(p)));
            t
        }
        Algorithm::Dsa => {
            let mut dsa: DcopConfig = config.dsa.clone();
            if let Some(c) = spec.coherence {
                (dsa.p_c, dsa.p_a) = (c.p_c, c.p_a);
            }
            run_dsa_scored(p, &dsa, inst.meta.seed, score)?.trace
        }
    };
    Ok(trace)
}

fn records(spec: &RunSpec, seed: u64, trace: &Trace, wall_ms: u64) -> Vec<RunRecord> {
    let algorithm = spec.label();
    trace
        .samples
        .iter()
        .enumerate()
        .map(|(sample, s)| RunRecord {
            algorithm: algorithm.clone(),
            seed,
            sample,
            nclo: s.nclo,
            utility: s.utility,
            wall_ms,
        })
        .collect()
}

/// Runs every spec on every instance. Rows are ordered by instance, then
/// spec, then sample, whatever the number of workers.
pub fn cmd_run(
    instances: &[Instance],
    specs: &[RunSpec],
    config: &ExperimentConfig,
    options: RunOptions,
) -> Result<Vec<RunRecord>, CliError> {
    if instances.is_empty() {
        return Err(CliError::NoInstances);
    }
    let mut seeds = HashSet::new();
    if let Some(dup) = instances.iter().find(|i| !seeds.insert(i.meta.seed)) {
        return Err(CliError::DuplicateSeed(dup.meta.seed));
    }
    let jobs: Vec<(&Instance, &RunSpec)> =
        instances.iter().flat_map(|i| specs.iter().map(move |s| (i, s))).collect();
    let work = || {
        jobs.par_iter()
            .map(|(inst, spec)| {
                let start = Instant::now();
                let trace = solve(inst, spec, config)?;
                let wall_ms = if options.wall_time { start.elapsed().as_millis() as u64 } else { 0 };
                Ok(records(spec, inst.meta.seed, &trace, wall_ms))
            })
            .collect::<Result<Vec<_>, CliError>>()
    };
    let blocks = match options.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?
            .install(work)?,
        None => work()?,
    };
    Ok(blocks.into_iter().flatten().collect())
}
