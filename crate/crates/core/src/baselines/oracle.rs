//! Exhaustive search over a discretized schedule space for tiny instances.
//!
//! Services are appended one at a time to any provider's schedule. A service
//! covers either all the workload the pair can still exchange or half of it,
//! and starts at the provider's earliest arrival or aligned with the start of
//! another provider already serving the same `(requester, skill)`. Partial
//! solutions reached by different orders are visited once, and branches whose
//! optimistic value cannot beat the incumbent are pruned.

use std::collections::HashSet;

use crate::model::{
    decay_factor, earliest_feasible_start, global_utility, travel_time, Problem, ProviderId,
    ServiceTuple, Solution, EPS,
};

use super::greedy::{tail, used_by_provider, used_by_requester};

pub const MAX_PROVIDERS: usize = 3;
pub const MAX_REQUESTERS: usize = 3;
pub const MAX_SKILLS: u16 = 2;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("instance too large for enumeration ({providers} providers, {requesters} requesters, {skills} skills)")]
    TooLarge { providers: usize, requesters: usize, skills: u16 },
    #[error("enumeration budget of {0} nodes exhausted")]
    BudgetExceeded(u64),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub solution: Solution,
    pub utility: f64,
    pub nodes: u64,
}

struct Search<'a> {
    problem: &'a Problem,
    budget: u64,
    nodes: u64,
    seen: HashSet<Vec<u64>>,
    best: (f64, Solution),
}

fn key(solution: &Solution) -> Vec<u64> {
    let mut k = Vec::new();
    for (p, sched) in &solution.schedules {
        k.push(u64::from(p.0) << 32 | sched.len() as u64);
        for t in sched.services() {
            k.push(u64::from(t.requester.0) << 16 | u64::from(t.skill.0));
            k.push(t.workload.to_bits());
            k.push(t.start.to_bits());
        }
    }
    k
}

impl Search<'_> {
    /// Value if every existing service got a full team and every unmet
    /// workload were delivered at the earliest arrival of any capable provider.
    fn optimistic(&self, solution: &Solution) -> f64 {
        let problem = self.problem;
        let mut total = 0.0;
        for req in &problem.requesters {
            for rs in &req.skills {
                let mut frac = 0.0;
                for (_, t) in solution.services() {
                    if t.requester == req.id && t.skill == rs.skill {
                        frac += t.workload / rs.workload * decay_factor(t.start, rs.deadline).unwrap_or(0.0);
                    }
                }
                let left = rs.workload - used_by_requester(solution, req.id, rs.skill);
                let mut supply = 0.0;
                let mut first = f64::INFINITY;
                for prof in &problem.providers {
                    let Some(ps) = prof.skill(rs.skill) else { continue };
                    let free = ps.workload - used_by_provider(solution, prof.id, rs.skill);
                    let open = solution.schedule(prof.id).map_or(0, |s| s.len()) < prof.max_services;
                    if free <= EPS || !open {
                        continue;
                    }
                    supply += free;
                    let (pos, at) = tail(problem, solution, prof.id);
                    first = first.min(at + travel_time(pos, req.location, prof.speed));
                }
                if first.is_finite() && left > EPS {
                    let decay = decay_factor(first, rs.deadline).unwrap_or(0.0);
                    frac += left.min(supply) / rs.workload * decay;
                }
                total += rs.max_utility * frac.min(1.0);
            }
        }
        total
    }

    fn moves(&self, solution: &Solution) -> Vec<(ProviderId, ServiceTuple)> {
        let problem = self.problem;
        let mut out = Vec::new();
        for prof in &problem.providers {
            if solution.schedule(prof.id).map_or(0, |s| s.len()) >= prof.max_services {
                continue;
            }
            let (pos, free) = tail(problem, solution, prof.id);
            for req in &problem.requesters {
                for rs in &req.skills {
                    let Some(ps) = prof.skill(rs.skill) else { continue };
                    let full = (ps.workload - used_by_provider(solution, prof.id, rs.skill))
                        .min(rs.workload - used_by_requester(solution, req.id, rs.skill));
                    if full <= EPS {
                        continue;
                    }
                    let earliest = free + travel_time(pos, req.location, prof.speed);
                    let mut starts: Vec<f64> = std::iter::once(earliest)
                        .chain(
                            solution
                                .services()
                                .filter(|(q, t)| {
                                    *q != prof.id
                                        && t.requester == req.id
                                        && t.skill == rs.skill
                                        && t.start > earliest + EPS
                                })
                                .map(|(_, t)| t.start),
                        )
                        .collect();
                    starts.sort_by(f64::total_cmp);
                    starts.dedup_by(|a, b| (*a - *b).abs() <= EPS);
                    for w in [full, full / 2.0] {
                        let mut placed: Vec<f64> = starts
                            .iter()
                            .filter_map(|&s| earliest_feasible_start(problem, solution, req.id, rs.skill, w, s))
                            .filter(|&s| s < rs.deadline)
                            .collect();
                        placed.dedup_by(|a, b| (*a - *b).abs() <= EPS);
                        for s in placed {
                            out.push((prof.id, ServiceTuple::new(req.id, rs.skill, w, s, ps.rate)));
                        }
                    }
                }
            }
        }
        out
    }

    fn dfs(&mut self, solution: &mut Solution) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OracleError::BudgetExceeded(self.budget));
        }
        if !self.seen.insert(key(solution)) {
            return Ok(());
        }
        let value = global_utility(self.problem, solution);
        if value > self.best.0 + 1e-12 {
            self.best = (value, solution.clone());
        }
        if self.optimistic(solution) <= self.best.0 + 1e-9 {
            return Ok(());
        }
        for (p, t) in self.moves(solution) {
            solution.schedule_mut(p).push(t);
            let r = self.dfs(solution);
            solution.schedule_mut(p).slots.pop();
            r?;
        }
        Ok(())
    }
}

/// Best solution in the discretized space, or a refusal if the instance or the
/// search is too large.
pub fn brute_force_oracle(problem: &Problem, budget: u64) -> Result<OracleResult, OracleError> {
    if problem.providers.len() > MAX_PROVIDERS
        || problem.requesters.len() > MAX_REQUESTERS
        || problem.num_skills > MAX_SKILLS
    {
        return Err(OracleError::TooLarge {
            providers: problem.providers.len(),
            requesters: problem.requesters.len(),
            skills: problem.num_skills,
        });
    }
    let empty = Solution::empty(problem);
    let mut search = Search {
        problem,
        budget,
        nodes: 0,
        seen: HashSet::new(),
        best: (0.0, empty.clone()),
    };
    let mut root = empty;
    search.dfs(&mut root)?;
    let (utility, solution) = search.best;
    Ok(OracleResult { solution, utility, nodes: search.nodes })
}
