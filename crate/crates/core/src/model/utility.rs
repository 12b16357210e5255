//! Utility evaluation shared by every algorithm, baseline and oracle.
//!
//! A requested skill earns, for each service segment delivered to it, the
//! fraction of its requested workload the segment covers, scaled by the team
//! capability factor at the segment's start and by the linear latency decay at
//! that start. The per-skill sum is capped at `u*`; a requester's utility is the
//! sum over its skills and the global utility is the sum over requesters.

use std::collections::BTreeMap;

use super::types::{
    Point, Problem, ProviderId, ProviderProfile, RequestedSkill, RequesterId, RequesterProfile,
    ServiceTuple, SkillId, Solution, EPS,
};
use super::ModelError;

/// `min(q / q*, 1)`.
pub fn capability_factor(q: usize, q_star: u32) -> f64 {
    debug_assert!(q_star > 0);
    (q as f64 / q_star as f64).min(1.0)
}

/// Linear latency decay: 1 at time zero, 0 at or after `deadline`.
pub fn decay_factor(start: f64, deadline: f64) -> Result<f64, ModelError> {
    if start < -EPS || start.is_nan() {
        return Err(ModelError::NegativeStart(start));
    }
    if !(deadline > 0.0) {
        return Err(ModelError::InvalidDeadline(deadline));
    }
    Ok(((deadline - start.max(0.0)) / deadline).max(0.0))
}

pub fn work_time(profile: &ProviderProfile, skill: SkillId, workload: f64) -> Result<f64, ModelError> {
    let ps = profile
        .skill(skill)
        .ok_or(ModelError::SkillNotProvidable(profile.id, skill))?;
    Ok(ps.rate * workload)
}

pub fn travel_time(from: Point, to: Point, speed: f64) -> f64 {
    from.distance(to) / speed
}

/// One service segment as seen by the requester: how much workload, when it
/// starts, and how many providers of the same skill are working at that start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub workload: f64,
    pub start: f64,
    pub concurrent: usize,
}

fn segment_value(req: &RequestedSkill, seg: &Segment) -> f64 {
    if seg.start >= req.deadline {
        return 0.0;
    }
    let decay = ((req.deadline - seg.start.max(0.0)) / req.deadline).max(0.0);
    (seg.workload / req.workload) * capability_factor(seg.concurrent, req.team_size) * decay
}

pub(crate) fn skill_value(req: &RequestedSkill, segments: &[Segment]) -> f64 {
    if segments.is_empty() || req.workload <= 0.0 {
        return 0.0;
    }
    let frac: f64 = segments.iter().map(|s| segment_value(req, s)).sum();
    (req.max_utility * frac).min(req.max_utility)
}

/// Utility a requester derives from the given segments of one skill.
pub fn skill_utility(
    requester: &RequesterProfile,
    skill: SkillId,
    segments: &[Segment],
) -> Result<f64, ModelError> {
    let req = requester
        .skill(skill)
        .ok_or(ModelError::SkillNotRequested(requester.id, skill))?;
    let mut total = 0.0;
    for seg in segments {
        if seg.start < -EPS || seg.start.is_nan() {
            return Err(ModelError::NegativeStart(seg.start));
        }
        total += seg.workload;
    }
    if total > req.workload * (1.0 + EPS) + EPS {
        return Err(ModelError::WorkloadExceeded {
            requester: requester.id,
            skill,
            provided: total,
            requested: req.workload,
        });
    }
    Ok(skill_value(req, segments))
}

pub(crate) fn segments_of_tuples(tuples: &[(ProviderId, &ServiceTuple)]) -> Vec<Segment> {
    tuples
        .iter()
        .map(|(_, t)| {
            // tuples arrive grouped by provider, so dedup counts distinct providers
            let mut ps: Vec<ProviderId> = tuples
                .iter()
                .filter(|(_, o)| o.active_at(t.start))
                .map(|(p, _)| *p)
                .collect();
            ps.dedup();
            Segment {
                workload: t.workload,
                start: t.start,
                concurrent: ps.len().max(1),
            }
        })
        .collect()
}

/// Segments of `(requester, skill)` in a solution, with the concurrency count of
/// each measured at its start.
pub fn segments_for(solution: &Solution, requester: RequesterId, skill: SkillId) -> Vec<Segment> {
    let tuples: Vec<_> = solution
        .services()
        .filter(|(_, t)| t.requester == requester && t.skill == skill)
        .collect();
    segments_of_tuples(&tuples)
}

pub fn requester_utility(problem: &Problem, requester: RequesterId, solution: &Solution) -> f64 {
    let req = problem.requester(requester);
    req.skills
        .iter()
        .map(|rs| skill_value(rs, &segments_for(solution, requester, rs.skill)))
        .sum()
}

/// Global utility: the sum of requester utilities.
pub fn global_utility(problem: &Problem, solution: &Solution) -> f64 {
    let mut per_pair: BTreeMap<(RequesterId, SkillId), Vec<(ProviderId, &ServiceTuple)>> =
        BTreeMap::new();
    for (p, t) in solution.services() {
        per_pair.entry((t.requester, t.skill)).or_default().push((p, t));
    }
    per_pair
        .iter()
        .filter_map(|((r, s), tuples)| {
            let req = problem.try_requester(*r)?.skill(*s)?;
            Some(skill_value(req, &segments_of_tuples(tuples)))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ProvidedSkill, RequestedSkill};

    fn requester(w: f64, q: u32, u: f64, deadline: f64) -> RequesterProfile {
        RequesterProfile {
            id: RequesterId(0),
            skills: vec![RequestedSkill {
                skill: SkillId(0),
                workload: w,
                team_size: q,
                max_utility: u,
                deadline,
            }],
            location: Point::default(),
        }
    }

    fn provider(rate: f64) -> ProviderProfile {
        ProviderProfile {
            id: ProviderId(0),
            skills: vec![ProvidedSkill { skill: SkillId(0), workload: 10.0, rate }],
            max_services: 4,
            location: Point::default(),
            speed: 1.0,
        }
    }

    #[test]
    fn capability_examples() {
        assert_eq!(capability_factor(1, 2), 0.5);
        assert_eq!(capability_factor(2, 2), 1.0);
        assert_eq!(capability_factor(5, 2), 1.0);
        assert_eq!(capability_factor(0, 2), 0.0);
    }

    #[test]
    fn capability_weakly_monotone() {
        for q_star in 1..=5u32 {
            let mut prev = 0.0;
            for q in 0..=(3 * q_star as usize) {
                let c = capability_factor(q, q_star);
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn decay_examples() {
        assert_eq!(decay_factor(0.0, 100.0).unwrap(), 1.0);
        assert_eq!(decay_factor(100.0, 100.0).unwrap(), 0.0);
        assert!((decay_factor(10.0, 100.0).unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(decay_factor(250.0, 100.0).unwrap(), 0.0);
        assert!(matches!(decay_factor(-1.0, 100.0), Err(ModelError::NegativeStart(_))));
    }

    #[test]
    fn work_time_examples() {
        assert_eq!(work_time(&provider(1.5), SkillId(0), 4.0).unwrap(), 6.0);
        assert_eq!(work_time(&provider(1.5), SkillId(0), 0.0).unwrap(), 0.0);
        assert_eq!(work_time(&provider(2.0), SkillId(0), 0.5).unwrap(), 1.0);
        assert!(work_time(&provider(1.0), SkillId(3), 1.0).is_err());
    }

    #[test]
    fn travel_examples() {
        assert_eq!(travel_time(Point::new(0.0, 0.0), Point::new(3.0, 4.0), 1.0), 5.0);
        assert_eq!(travel_time(Point::new(2.0, 2.0), Point::new(2.0, 2.0), 60.0), 0.0);
        assert_eq!(travel_time(Point::new(0.0, 0.0), Point::new(60.0, 0.0), 60.0), 1.0);
    }

    #[test]
    fn skill_utility_examples() {
        let r = requester(4.0, 1, 1000.0, 100.0);
        let full_now = [Segment { workload: 4.0, start: 0.0, concurrent: 1 }];
        assert_eq!(skill_utility(&r, SkillId(0), &full_now).unwrap(), 1000.0);
        assert_eq!(skill_utility(&r, SkillId(0), &[]).unwrap(), 0.0);
        let late = [Segment { workload: 4.0, start: 10.0, concurrent: 1 }];
        assert!((skill_utility(&r, SkillId(0), &late).unwrap() - 900.0).abs() < 1e-9);
        let too_much = [
            Segment { workload: 3.0, start: 0.0, concurrent: 1 },
            Segment { workload: 3.0, start: 0.0, concurrent: 1 },
        ];
        assert!(matches!(
            skill_utility(&r, SkillId(0), &too_much),
            Err(ModelError::WorkloadExceeded { .. })
        ));
    }

    #[test]
    fn segments_past_deadline_are_worthless() {
        let r = requester(4.0, 1, 1000.0, 100.0);
        let segs = [Segment { workload: 2.0, start: 100.0, concurrent: 1 }];
        assert_eq!(skill_utility(&r, SkillId(0), &segs).unwrap(), 0.0);
    }
}
