//! Reference schedulers: a one-shot distributed matching, a centralized greedy
//! and an exhaustive oracle for tiny instances.

mod greedy;
mod oneshot;
mod oracle;

pub use greedy::{greedy_candidates, run_centralized_greedy, GreedyCandidate};
pub use oneshot::{run_dgs_oneshot, run_dgs_oneshot_scored, OneShotOutcome};
pub use oracle::{
    brute_force_oracle, OracleError, OracleResult, DEFAULT_BUDGET, MAX_PROVIDERS, MAX_REQUESTERS,
    MAX_SKILLS,
};
