use crate::model::{
    earliest_feasible_start, segments_for, skill_value, travel_time, Problem, ProviderId,
    RequesterId, ServiceTuple, SkillId, Solution, EPS,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyCandidate {
    pub provider: ProviderId,
    pub requester: RequesterId,
    pub skill: SkillId,
    /// Marginal utility per unit of workload.
    pub score: f64,
    pub tuple: ServiceTuple,
}

/// Where and when provider `p` becomes available after its current schedule.
pub(crate) fn tail(problem: &Problem, solution: &Solution, p: ProviderId) -> (crate::model::Point, f64) {
    let prof = problem.provider(p);
    match solution.schedule(p).and_then(|s| s.last_service()) {
        Some(t) => (problem.requester(t.requester).location, t.finish),
        None => (prof.location, 0.0),
    }
}

pub(crate) fn used_by_provider(solution: &Solution, p: ProviderId, s: SkillId) -> f64 {
    solution
        .schedule(p)
        .map(|sch| sch.services().filter(|t| t.skill == s).map(|t| t.workload).sum())
        .unwrap_or(0.0)
}

pub(crate) fn used_by_requester(solution: &Solution, r: RequesterId, s: SkillId) -> f64 {
    solution
        .services()
        .filter(|(_, t)| t.requester == r && t.skill == s)
        .map(|(_, t)| t.workload)
        .sum()
}

/// Utility gained for `(r, s)` by appending `tuple` to provider `p`.
pub(crate) fn marginal(problem: &Problem, solution: &mut Solution, p: ProviderId, tuple: ServiceTuple) -> f64 {
    let Some(req) = problem.requester(tuple.requester).skill(tuple.skill) else {
        return 0.0;
    };
    let before = skill_value(req, &segments_for(solution, tuple.requester, tuple.skill));
    solution.schedule_mut(p).push(tuple);
    let after = skill_value(req, &segments_for(solution, tuple.requester, tuple.skill));
    solution.schedule_mut(p).slots.pop();
    after - before
}

/// Best next service per provider, requester and skill given `solution`.
pub fn greedy_candidates(problem: &Problem, solution: &mut Solution) -> Vec<GreedyCandidate> {
    let mut out = Vec::new();
    for prof in &problem.providers {
        if solution.schedule(prof.id).map_or(0, |s| s.len()) >= prof.max_services {
            continue;
        }
        let (pos, free) = tail(problem, solution, prof.id);
        for req in &problem.requesters {
            for rs in &req.skills {
                let Some(ps) = prof.skill(rs.skill) else { continue };
                let w = (ps.workload - used_by_provider(solution, prof.id, rs.skill))
                    .min(rs.workload - used_by_requester(solution, req.id, rs.skill));
                if w <= EPS {
                    continue;
                }
                let earliest = free + travel_time(pos, req.location, prof.speed);
                let Some(start) = earliest_feasible_start(problem, solution, req.id, rs.skill, w, earliest) else {
                    continue;
                };
                if start >= rs.deadline {
                    continue;
                }
                let tuple = ServiceTuple::new(req.id, rs.skill, w, start, ps.rate);
                let gain = marginal(problem, solution, prof.id, tuple);
                out.push(GreedyCandidate {
                    provider: prof.id,
                    requester: req.id,
                    skill: rs.skill,
                    score: gain / w,
                    tuple,
                });
            }
        }
    }
    out
}

/// Commits the highest marginal-utility-per-workload service one at a time
/// until nothing positive remains. Deterministic.
pub fn run_centralized_greedy(problem: &Problem) -> Solution {
    let mut solution = Solution::empty(problem);
    loop {
        let best = greedy_candidates(problem, &mut solution)
            .into_iter()
            .filter(|c| c.score > EPS)
            .reduce(|a, b| if b.score > a.score { b } else { a });
        match best {
            Some(c) => solution.schedule_mut(c.provider).push(c.tuple),
            None => return solution,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, provider, requester};
    use crate::model::{global_utility, validate_solution, Point, Problem};

    #[test]
    fn t1_single_service() {
        let p = fixtures::t1();
        let s = run_centralized_greedy(&p);
        assert_eq!(s.num_services(), 1);
        assert!((global_utility(&p, &s) - 900.0).abs() < 1e-9);
    }

    #[test]
    fn higher_score_first() {
        let o = Point::default();
        let p = Problem {
            num_skills: 1,
            providers: vec![provider(0, o, &[(0, 8.0, 1.0)])],
            requesters: vec![
                requester(0, o, &[(0, 4.0, 1, 400.0, 1000.0)]),
                requester(1, o, &[(0, 4.0, 1, 1000.0, 1000.0)]),
            ],
            precedences: vec![],
        };
        let mut s = Solution::empty(&p);
        let c = greedy_candidates(&p, &mut s);
        let scores: Vec<f64> = c.iter().map(|c| c.score).collect();
        assert_eq!(scores, vec![100.0, 250.0]);
        let s = run_centralized_greedy(&p);
        let first = s.schedule(ProviderId(0)).unwrap().services().next().unwrap();
        assert_eq!(first.requester, RequesterId(1));
    }

    #[test]
    fn empty_problem() {
        let p = Problem { num_skills: 1, providers: vec![], requesters: vec![], precedences: vec![] };
        assert_eq!(run_centralized_greedy(&p).num_services(), 0);
    }

    #[test]
    fn chain_is_valid() {
        let p = fixtures::chain();
        let s = run_centralized_greedy(&p);
        assert!(validate_solution(&s, &p).is_ok());
        assert_eq!(s.num_services(), 2);
    }
}
