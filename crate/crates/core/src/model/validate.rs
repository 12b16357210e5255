use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::precedence::first_violation;
use super::types::{Problem, ProviderId, RequesterId, SkillId, Solution, EPS};
use super::utility::travel_time;

const TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    MissingProvider(ProviderId),
    UnknownProvider(ProviderId),
    UnknownRequester { provider: ProviderId, requester: RequesterId },
    TooManyServices { provider: ProviderId, len: usize, max: usize },
    SkillNotProvidable { provider: ProviderId, skill: SkillId },
    SkillNotRequested { provider: ProviderId, requester: RequesterId, skill: SkillId },
    NonPositiveWorkload { provider: ProviderId, index: usize },
    NegativeStart { provider: ProviderId, index: usize },
    WrongDuration { provider: ProviderId, index: usize },
    TravelInfeasible { provider: ProviderId, index: usize },
    ProviderWorkloadExceeded { provider: ProviderId, skill: SkillId, used: f64, available: f64 },
    RequesterWorkloadExceeded { requester: RequesterId, skill: SkillId, used: f64, requested: f64 },
    PrecedenceViolated { requester: RequesterId, before: SkillId, after: SkillId, at: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            MissingProvider(p) => write!(f, "{p}: missing from solution"),
            UnknownProvider(p) => write!(f, "{p}: not part of the problem"),
            UnknownRequester { provider, requester } => {
                write!(f, "{provider}: serves unknown requester {requester}")
            }
            TooManyServices { provider, len, max } => {
                write!(f, "{provider}: {len} slots exceed the maximum of {max}")
            }
            SkillNotProvidable { provider, skill } => {
                write!(f, "{provider}: cannot provide {skill}")
            }
            SkillNotRequested { provider, requester, skill } => {
                write!(f, "{provider}: {requester} does not request {skill}")
            }
            NonPositiveWorkload { provider, index } => {
                write!(f, "{provider}: service {index} has non-positive workload")
            }
            NegativeStart { provider, index } => {
                write!(f, "{provider}: service {index} starts before time zero")
            }
            WrongDuration { provider, index } => {
                write!(f, "{provider}: service {index} finish does not match work time")
            }
            TravelInfeasible { provider, index } => {
                write!(f, "{provider}: service {index} starts before the provider can arrive")
            }
            ProviderWorkloadExceeded { provider, skill, used, available } => write!(
                f,
                "{provider}: workload exceeded for {skill} ({used} > {available})"
            ),
            RequesterWorkloadExceeded { requester, skill, used, requested } => write!(
                f,
                "{requester}: workload exceeded for {skill} ({used} > {requested})"
            ),
            PrecedenceViolated { requester, before, after, at } => write!(
                f,
                "{requester}: {after} started at {at} before enough {before} finished"
            ),
        }
    }
}

/// Checks schedule structure, travel feasibility, workload conservation on both
/// sides and skill precedences. Never panics.
pub fn validate_solution(solution: &Solution, problem: &Problem) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let present: BTreeSet<ProviderId> = solution.schedules.keys().copied().collect();
    for p in &problem.providers {
        if !present.contains(&p.id) {
            out.push(Violation::MissingProvider(p.id));
        }
    }
    let mut requested_use: BTreeMap<(RequesterId, SkillId), f64> = BTreeMap::new();
    for (&pid, sched) in &solution.schedules {
        let Some(prov) = problem.try_provider(pid) else {
            out.push(Violation::UnknownProvider(pid));
            continue;
        };
        if sched.len() > prov.max_services {
            out.push(Violation::TooManyServices {
                provider: pid,
                len: sched.len(),
                max: prov.max_services,
            });
        }
        let mut provided_use: BTreeMap<SkillId, f64> = BTreeMap::new();
        let mut at = prov.location;
        let mut free = 0.0;
        for (index, t) in sched.services().enumerate() {
            let Some(req) = problem.try_requester(t.requester) else {
                out.push(Violation::UnknownRequester { provider: pid, requester: t.requester });
                continue;
            };
            let Some(ps) = prov.skill(t.skill) else {
                out.push(Violation::SkillNotProvidable { provider: pid, skill: t.skill });
                continue;
            };
            if !req.requests(t.skill) {
                out.push(Violation::SkillNotRequested {
                    provider: pid,
                    requester: t.requester,
                    skill: t.skill,
                });
            }
            if !(t.workload > 0.0) {
                out.push(Violation::NonPositiveWorkload { provider: pid, index });
            }
            if t.start < -EPS {
                out.push(Violation::NegativeStart { provider: pid, index });
            }
            let expected = t.start + ps.rate * t.workload;
            if (t.finish - expected).abs() > TOL * (1.0 + expected.abs()) {
                out.push(Violation::WrongDuration { provider: pid, index });
            }
            let arrive = free + travel_time(at, req.location, prov.speed);
            if t.start + TOL * (1.0 + arrive.abs()) < arrive {
                out.push(Violation::TravelInfeasible { provider: pid, index });
            }
            at = req.location;
            free = t.finish.max(t.start);
            *provided_use.entry(t.skill).or_default() += t.workload;
            *requested_use.entry((t.requester, t.skill)).or_default() += t.workload;
        }
        for (skill, used) in provided_use {
            if let Some(ps) = prov.skill(skill) {
                if used > ps.workload + TOL * (1.0 + ps.workload) {
                    out.push(Violation::ProviderWorkloadExceeded {
                        provider: pid,
                        skill,
                        used,
                        available: ps.workload,
                    });
                }
            }
        }
    }
    for ((r, s), used) in requested_use {
        if let Some(rs) = problem.try_requester(r).and_then(|x| x.skill(s)) {
            if used > rs.workload + TOL * (1.0 + rs.workload) {
                out.push(Violation::RequesterWorkloadExceeded {
                    requester: r,
                    skill: s,
                    used,
                    requested: rs.workload,
                });
            }
        }
    }
    for pr in &problem.precedences {
        if let Some(at) = first_violation(solution, pr) {
            out.push(Violation::PrecedenceViolated {
                requester: pr.requester,
                before: pr.before,
                after: pr.after,
                at,
            });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
