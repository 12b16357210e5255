use somaop::dcop::DcopError;
use somaop::dsrm::DsrmError;
use somaop::engine::EngineError;
use somaop::scenarios::ScenarioError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown algorithm `{name}`; valid names: {valid}")]
    UnknownAlgorithm { name: String, valid: String },
    #[error("{n_sp} providers cannot be split at magnitude {magnitude}: the requester count must be a positive integer")]
    Magnitude { n_sp: usize, magnitude: usize },
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("two instances share seed {0}")]
    DuplicateSeed(u64),
    #[error("no instances to run")]
    NoInstances,
    #[error("run file holds no records")]
    EmptyCsv,
    #[error("run file: {0}")]
    Schema(String),
    #[error("plot: {0}")]
    Plot(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Dsrm(#[from] DsrmError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dcop(#[from] DcopError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Config(#[from] toml::de::Error),
}
