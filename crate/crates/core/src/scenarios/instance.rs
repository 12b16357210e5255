//! On-disk instance container: a versioned JSON document holding the problem,
//! generation metadata and, for MCI instances, the casualty annex.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MciAnnex, MciInstance, ScenarioError, SimulatorKind};
use crate::model::{Problem, Solution};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub simulator: SimulatorKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub format_version: u32,
    pub meta: InstanceMeta,
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mci: Option<MciAnnex>,
}

impl Instance {
    pub fn from_abstract(problem: Problem, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            meta: InstanceMeta { simulator: SimulatorKind::Abstract, seed },
            problem,
            mci: None,
        }
    }

    pub fn from_mci(instance: MciInstance, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            meta: InstanceMeta { simulator: SimulatorKind::Mci, seed },
            problem: instance.problem,
            mci: Some(instance.annex),
        }
    }

    pub fn kind(&self) -> SimulatorKind {
        self.meta.simulator
    }

    /// The MCI view of this instance, if it has one.
    pub fn as_mci(&self) -> Option<MciInstance> {
        self.mci.as_ref().map(|annex| MciInstance {
            problem: self.problem.clone(),
            annex: annex.clone(),
        })
    }

    /// Total casualties, zero for abstract instances.
    pub fn casualties(&self) -> usize {
        self.mci.as_ref().map_or(0, |a| a.casualties.len())
    }

    /// Utility reported for a solution: the model utility for abstract
    /// instances, survivors above the threshold for MCI ones.
    pub fn reported_utility(&self, solution: &Solution) -> f64 {
        match &self.mci {
            None => crate::model::global_utility(&self.problem, solution),
            Some(annex) => {
                let inst = MciInstance { problem: self.problem.clone(), annex: annex.clone() };
                super::mci_utility(solution, &inst)
            }
        }
    }

    pub fn check(&self) -> Result<(), ScenarioError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ScenarioError::UnsupportedVersion(self.format_version));
        }
        self.problem.check().map_err(ScenarioError::InvalidInstance)?;
        match (self.meta.simulator, &self.mci) {
            (SimulatorKind::Mci, None) => {
                Err(ScenarioError::InvalidInstance("MCI instance without annex".into()))
            }
            (SimulatorKind::Abstract, Some(_)) => {
                Err(ScenarioError::InvalidInstance("abstract instance with MCI annex".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let inst: Instance = serde_json::from_str(text)?;
        inst.check()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> Result<String, ScenarioError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
