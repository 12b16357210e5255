use std::collections::BTreeMap;

use crate::dsrm::{
    assign_providers, bid_truncated, run_dgs_matching, BidTable, MatchSlot, Offer, SlotId,
};
use crate::engine::{EngineError, Trace};
use crate::model::{
    enforce_precedence, global_utility, travel_time, Problem, ProviderId, Solution, EPS,
};

#[derive(Debug, Clone)]
pub struct OneShotOutcome {
    pub trace: Trace,
    pub solution: Solution,
}

/// One matching at time zero with truncated bids; every matched provider then
/// serves its share from its earliest arrival to completion.
pub fn run_dgs_oneshot(problem: &Problem) -> Result<OneShotOutcome, EngineError> {
    run_dgs_oneshot_scored(problem, |s| global_utility(problem, s))
}

/// Like [`run_dgs_oneshot`], with trace samples scored by `score`.
pub fn run_dgs_oneshot_scored(
    problem: &Problem,
    score: impl Fn(&Solution) -> f64,
) -> Result<OneShotOutcome, EngineError> {
    let mut bids = BidTable::default();
    let mut slots = Vec::new();
    let mut offers: BTreeMap<(SlotId, ProviderId), Offer> = BTreeMap::new();
    let mut bid_ops = 0u64;
    for req in &problem.requesters {
        for rs in &req.skills {
            let mine: Vec<Offer> = problem
                .providers
                .iter()
                .filter_map(|p| {
                    let ps = p.skill(rs.skill)?;
                    (ps.workload > EPS).then(|| Offer {
                        sp: p.id,
                        skill: rs.skill,
                        workload: ps.workload,
                        start: travel_time(p.location, req.location, p.speed),
                        rate: ps.rate,
                    })
                })
                .collect();
            if mine.is_empty() {
                continue;
            }
            let slot = SlotId { requester: req.id, skill: rs.skill };
            bid_ops += (mine.len() * mine.len()) as u64;
            for (p, b) in bid_truncated(rs, rs.workload, &[], &mine) {
                bids.insert(slot, p, b);
            }
            slots.push(MatchSlot {
                requester: req.id,
                skill: rs.skill,
                quota: (rs.team_size as usize).min(mine.len()),
            });
            offers.extend(mine.into_iter().map(|o| ((slot, o.sp), o)));
        }
    }
    let providers: Vec<ProviderId> = problem.providers.iter().map(|p| p.id).collect();
    let outcome = run_dgs_matching(&providers, &slots, &bids)?;

    let mut solution = Solution::empty(problem);
    for slot in &slots {
        let team: Vec<Offer> = outcome
            .matching
            .iter()
            .filter(|(_, s)| **s == slot.id())
            .filter_map(|(p, _)| offers.get(&(slot.id(), *p)).copied())
            .collect();
        let need = problem
            .requester(slot.requester)
            .skill(slot.skill)
            .map_or(0.0, |r| r.workload);
        for (p, t) in assign_providers(slot.requester, need, &team) {
            solution.schedule_mut(p).push(t);
        }
    }
    let solution = enforce_precedence(problem, &solution);
    let mut trace = Trace::default();
    trace.push(0, score(&Solution::empty(problem)));
    trace.push(outcome.nclo + bid_ops, score(&solution));
    Ok(OneShotOutcome { trace, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, provider, requester};
    use crate::model::{validate_solution, Point};

    #[test]
    fn t1_matches_full_service() {
        let p = fixtures::t1();
        let out = run_dgs_oneshot(&p).unwrap();
        assert!((out.trace.final_utility() - 900.0).abs() < 1e-9);
        assert!(validate_solution(&out.solution, &p).is_ok());
    }

    #[test]
    fn disjoint_skills_give_nothing() {
        let o = Point::default();
        let p = Problem {
            num_skills: 2,
            providers: vec![provider(0, o, &[(0, 4.0, 1.0)])],
            requesters: vec![requester(0, o, &[(1, 4.0, 1, 100.0, 10.0)])],
            precedences: vec![],
        };
        let out = run_dgs_oneshot(&p).unwrap();
        assert_eq!(out.solution.num_services(), 0);
        assert_eq!(out.trace.final_utility(), 0.0);
    }

    #[test]
    fn loose_quota_matches_everyone() {
        let o = Point::default();
        let p = Problem {
            num_skills: 1,
            providers: (0..3).map(|i| provider(i, o, &[(0, 1.0, 1.0)])).collect(),
            requesters: vec![requester(0, o, &[(0, 3.0, 3, 100.0, 10.0)])],
            precedences: vec![],
        };
        let out = run_dgs_oneshot(&p).unwrap();
        assert_eq!(out.solution.num_services(), 3);
        assert!(validate_solution(&out.solution, &p).is_ok());
    }
}
