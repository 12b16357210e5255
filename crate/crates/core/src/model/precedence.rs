//! Workload-flow ordering between skills of the same requester.
//!
//! For a precedence `before -> after`, the cumulative workload of `after` whose
//! service has started by any instant may not exceed the cumulative workload of
//! `before` finished by that instant.

use std::collections::BTreeMap;

use super::types::{
    Problem, ProviderId, RequesterId, ServiceTuple, SkillId, SkillPrecedence, Slot, Solution, EPS,
};

/// Workload of `(r, s)` finished by `t`.
pub fn completed_by(solution: &Solution, r: RequesterId, s: SkillId, t: f64) -> f64 {
    solution
        .services()
        .filter(|(_, x)| x.requester == r && x.skill == s && x.finish <= t + EPS)
        .map(|(_, x)| x.workload)
        .sum()
}

/// Workload of `(r, s)` started by `t`.
pub fn started_by(solution: &Solution, r: RequesterId, s: SkillId, t: f64) -> f64 {
    solution
        .services()
        .filter(|(_, x)| x.requester == r && x.skill == s && x.start <= t + EPS)
        .map(|(_, x)| x.workload)
        .sum()
}

/// Time at which the flow constraint is first broken, if ever.
pub fn first_violation(solution: &Solution, pr: &SkillPrecedence) -> Option<f64> {
    let mut starts: Vec<f64> = solution
        .services()
        .filter(|(_, x)| x.requester == pr.requester && x.skill == pr.after)
        .map(|(_, x)| x.start)
        .collect();
    starts.sort_by(f64::total_cmp);
    starts.into_iter().find(|&t| {
        started_by(solution, pr.requester, pr.after, t)
            > completed_by(solution, pr.requester, pr.before, t) + 1e-7
    })
}

/// Precedences sorted so that every chain is handled from its head.
fn chain_order(problem: &Problem) -> Vec<SkillPrecedence> {
    let depth = |pr: &SkillPrecedence| {
        let mut d = 0;
        let mut cur = pr.before;
        while let Some(prev) = problem.predecessor(pr.requester, cur) {
            d += 1;
            cur = prev;
            if d > problem.num_skills as usize {
                break;
            }
        }
        d
    };
    let mut out = problem.precedences.clone();
    out.sort_by_key(|pr| (depth(pr), pr.requester, pr.after));
    out
}

/// Trims successor services so that every precedence holds. Services trimmed to
/// nothing are removed; trimmed services keep their start and finish earlier.
pub fn enforce_precedence(problem: &Problem, solution: &Solution) -> Solution {
    if problem.precedences.is_empty() {
        return solution.clone();
    }
    let mut out = solution.clone();
    for pr in chain_order(problem) {
        // successor services ordered by start, then provider
        let mut refs: Vec<(f64, ProviderId, usize)> = Vec::new();
        for (p, sched) in &out.schedules {
            for (i, slot) in sched.slots.iter().enumerate() {
                if let Slot::Service(t) = slot {
                    if t.requester == pr.requester && t.skill == pr.after {
                        refs.push((t.start, *p, i));
                    }
                }
            }
        }
        refs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut used = 0.0;
        for (start, p, i) in refs {
            let avail = (completed_by(&out, pr.requester, pr.before, start) - used).max(0.0);
            let rate = problem
                .provider(p)
                .skill(pr.after)
                .map(|s| s.rate)
                .unwrap_or(0.0);
            let sched = out.schedules.get_mut(&p).expect("provider present");
            if let Slot::Service(t) = &mut sched.slots[i] {
                if t.workload > avail + EPS {
                    t.workload = avail;
                    t.finish = t.start + rate * avail;
                }
                used += t.workload;
            }
        }
    }
    for sched in out.schedules.values_mut() {
        sched
            .slots
            .retain(|s| !matches!(s, Slot::Service(t) if t.workload <= EPS));
    }
    out
}

/// Earliest start `>= earliest` at which `workload` of `(r, s)` can be added to
/// `solution` without breaking the precedence into `s`. `None` if it never can.
pub fn earliest_feasible_start(
    problem: &Problem,
    solution: &Solution,
    r: RequesterId,
    s: SkillId,
    workload: f64,
    earliest: f64,
) -> Option<f64> {
    let Some(before) = problem.predecessor(r, s) else {
        return Some(earliest);
    };
    let pred: Vec<&ServiceTuple> = solution
        .services()
        .filter(|(_, x)| x.requester == r && x.skill == before)
        .map(|(_, x)| x)
        .collect();
    let succ: Vec<&ServiceTuple> = solution
        .services()
        .filter(|(_, x)| x.requester == r && x.skill == s)
        .map(|(_, x)| x)
        .collect();
    let completed = |t: f64| -> f64 {
        pred.iter()
            .filter(|x| x.finish <= t + EPS)
            .map(|x| x.workload)
            .sum()
    };
    let started = |t: f64| -> f64 {
        succ.iter()
            .filter(|x| x.start <= t + EPS)
            .map(|x| x.workload)
            .sum()
    };
    let mut candidates: Vec<f64> = std::iter::once(earliest)
        .chain(pred.iter().map(|x| x.finish).filter(|&f| f > earliest))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup_by(|a, b| (*a - *b).abs() <= EPS);
    let mut later: Vec<f64> = succ.iter().map(|x| x.start).collect();
    later.sort_by(f64::total_cmp);
    candidates.into_iter().find(|&tau| {
        std::iter::once(tau)
            .chain(later.iter().copied().filter(|&t| t > tau))
            .all(|t| started(t) + workload <= completed(t) + 1e-7)
    })
}

/// Aggregated predecessor lookup keyed by `(requester, after)`.
pub fn predecessor_map(problem: &Problem) -> BTreeMap<(RequesterId, SkillId), SkillId> {
    problem
        .precedences
        .iter()
        .map(|p| ((p.requester, p.after), p.before))
        .collect()
}
