//! Seeded instance generators and the file format they are stored in.

mod abstract_sim;
mod instance;
mod mci;

use serde::{Deserialize, Serialize};

pub use abstract_sim::{gen_abstract, AbstractConfig};
pub use instance::{Instance, InstanceMeta, FORMAT_VERSION};
pub use mci::{
    arrival_times, default_site_types, default_unit_types, gen_mci, mci_objective,
    mci_ordering_constraints, mci_skill, mci_utility, skill_parts, Activity, CareCurve, Casualty,
    CasualtyOrdering, MciCurves, MciConfig, MciAnnex, MciInstance, SiteType, Triage, UnitKind,
    UnitType,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulatorKind {
    Abstract,
    Mci,
}

impl std::fmt::Display for SimulatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimulatorKind::Abstract => "abstract",
            SimulatorKind::Mci => "mci",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("unsupported instance format version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
