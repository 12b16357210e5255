use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use somaop::scenarios::SimulatorKind;
use somaop_cli::{
    build_report, cmd_generate, cmd_run, generate, load_instances, plan, read_records,
    write_records, Algorithm, CliError, ExperimentConfig, Family, RunOptions,
};

#[derive(Parser)]
#[command(name = "somaop", version, about = "Generate, solve and report service scheduling experiments")]
struct Cli {
    /// TOML file with algorithm and generator settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a family of instances as JSON files.
    Generate {
        #[command(flatten)]
        family: FamilyArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve instances and write one CSV row per trace sample.
    Run(RunArgs),
    /// Summarize run files into tables and plots.
    Report {
        /// Run files; rows are concatenated in the given order.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Simulator {
    Abstract,
    Mci,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "abstract")]
    simulator: Simulator,
    #[arg(long, default_value_t = 20)]
    n_sp: usize,
    /// Providers per requester.
    #[arg(long, default_value_t = 4)]
    magnitude: usize,
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Seed of the first instance; later ones count up from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Instance files or directories. Without them a family is generated
    /// in memory from the family flags.
    #[arg(long, num_args = 1..)]
    instances: Vec<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_delimiter = ',', default_value = "rpa,dsrm-simple,dsrm-truncated,dgs,greedy")]
    algorithms: Vec<String>,
    /// DSA chance of knowing a utility entry; a list runs one column per value.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    p_c: Vec<f64>,
    /// DSA chance of seeing a neighbour's assignment; a list runs one column per value.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    p_a: Vec<f64>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the wall_ms column. Timed files differ between reruns.
    #[arg(long)]
    wall_time: bool,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

impl FamilyArgs {
    fn family(&self) -> Family {
        Family {
            simulator: match self.simulator {
                Simulator::Abstract => SimulatorKind::Abstract,
                Simulator::Mci => SimulatorKind::Mci,
            },
            n_sp: self.n_sp,
            magnitude: self.magnitude,
            count: self.count,
            seed: self.seed,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match cli.command {
        Command::Generate { family, out } => {
            let paths = cmd_generate(&family.family(), &config, &out)?;
            eprintln!("wrote {} instances to {}", paths.len(), out.display());
        }
        Command::Run(args) => {
            let algorithms: Vec<Algorithm> =
                args.algorithms.iter().map(|a| a.parse()).collect::<Result<_, _>>()?;
            let specs = plan(&algorithms, &args.p_c, &args.p_a)?;
            let instances = if args.instances.is_empty() {
                generate(&args.family.family(), &config)?
            } else {
                load_instances(&args.instances)?
            };
            let options = RunOptions { wall_time: args.wall_time, jobs: args.jobs };
            let records = cmd_run(&instances, &specs, &config, options)?;
            match &args.out {
                Some(path) => write_records(BufWriter::new(File::create(path)?), &records)?,
                None => write_records(io::stdout().lock(), &records)?,
            }
        }
        Command::Report { csv, out } => {
            let mut records = Vec::new();
            for path in &csv {
                records.extend(read_records(File::open(path)?)?);
            }
            let report = build_report(&records)?;
            report.write(&out)?;
            let mut stdout = io::stdout().lock();
            stdout.write_all(report.table().as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
