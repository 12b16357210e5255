//! The problem recast as a distributed constraint optimization over providers
//! only, solved by stochastic local search under limited information.

mod dsa;
mod translate;
mod views;

use serde::{Deserialize, Serialize};

use crate::engine::EngineError;
use crate::scenarios::SimulatorKind;

pub use dsa::{dsa_step, run_dsa, run_dsa_scored, DsaAgent, DsaMsg, DsaOutcome};
pub use translate::{
    default_time_grid, translate_to_dcop, Assignment, ConstraintId, Dcop, DcopConstraint,
    DcopValue, DcopVariable, Granule,
};
pub use views::{MaskedUtilityView, NeighborAssignmentView};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DcopError {
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DcopConfig {
    /// Chance that an agent knows a given utility-table entry.
    pub p_c: f64,
    /// Chance that an agent sees a given neighbor's assignment.
    pub p_a: f64,
    pub rounds: usize,
    pub grid_cap: usize,
    /// Variables per provider, further limited by its `max_services`.
    pub slots: usize,
    pub switch_probability: f64,
    /// Value of an unknown entry on the maximized utility scale.
    pub unwanted_utility: f64,
}

impl Default for DcopConfig {
    fn default() -> Self {
        Self {
            p_c: 1.0,
            p_a: 1.0,
            rounds: 50,
            grid_cap: 32,
            slots: 2,
            switch_probability: 0.7,
            unwanted_utility: 0.0,
        }
    }
}

impl DcopConfig {
    pub fn with_coherence(p_c: f64, p_a: f64) -> Self {
        Self { p_c, p_a, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DcopError> {
        for p in [self.p_c, self.p_a, self.switch_probability] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DcopError::Probability(p));
            }
        }
        Ok(())
    }
}

/// Worst outcome on each simulator's own objective: zero utility for the
/// abstract simulator, every casualty counted for MCI.
pub fn unwanted_outcome(kind: SimulatorKind, casualties: usize) -> f64 {
    match kind {
        SimulatorKind::Abstract => 0.0,
        SimulatorKind::Mci => casualties as f64,
    }
}

/// [`unwanted_outcome`] mapped onto the maximized utility scale.
pub fn unwanted_utility(kind: SimulatorKind, casualties: usize) -> f64 {
    match kind {
        SimulatorKind::Abstract => unwanted_outcome(kind, casualties),
        SimulatorKind::Mci => casualties as f64 - unwanted_outcome(kind, casualties),
    }
}
