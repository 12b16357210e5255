//! Experiment runner for the somaop schedulers: generates instance families,
//! runs algorithm batteries into a CSV trace file, and aggregates that file
//! into tables and SVG plots.

mod algorithm;
mod config;
mod error;
pub mod generate;
mod plot;
mod records;
pub mod report;
mod run;

pub use algorithm::{parse_label, plan, Algorithm, Coherence, RunSpec};
pub use config::ExperimentConfig;
pub use error::CliError;
pub use generate::{cmd_generate, generate, load_instances, Family};
pub use records::{read_records, split_runs, write_records, Run, RunRecord, COLUMNS, SCHEMA_LINE};
pub use report::{build_report, Report};
pub use run::{cmd_run, solve, RunOptions};
