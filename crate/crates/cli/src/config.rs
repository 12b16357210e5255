//! Experiment settings read from a TOML file. Every table is optional and
//! missing keys keep their library defaults.
//!
//! ```toml
//! [rpa]
//! iterations = 50
//! early_stop = true
//!
//! [dsrm]
//! epsilon = 1e-3
//!
//! [dsa]
//! rounds = 50
//!
//! [abstract]
//! grid = 10.0
//!
//! [mci.curves]
//! threshold = 0.4
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use somaop::dcop::DcopConfig;
use somaop::dsrm::DsrmConfig;
use somaop::rpa::RpaConfig;
use somaop::scenarios::{AbstractConfig, MciConfig};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rpa: RpaConfig,
    /// The bid mode is set by the algorithm name and ignored here.
    pub dsrm: DsrmConfig,
    /// `p_c` and `p_a` are taken from the command line.
    pub dsa: DcopConfig,
    #[serde(rename = "abstract")]
    pub abstract_sim: AbstractConfig,
    pub mci: MciConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CliError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
