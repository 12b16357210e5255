//! Small hand-built instances used by tests, docs and the oracle.

use crate::model::{
    Point, Problem, ProvidedSkill, ProviderId, ProviderProfile, RequestedSkill, RequesterId,
    RequesterProfile, SkillId, SkillPrecedence,
};

pub fn provider(id: u32, at: Point, skills: &[(u16, f64, f64)]) -> ProviderProfile {
    ProviderProfile {
        id: ProviderId(id),
        skills: skills
            .iter()
            .map(|&(s, workload, rate)| ProvidedSkill { skill: SkillId(s), workload, rate })
            .collect(),
        max_services: 4,
        location: at,
        speed: 1.0,
    }
}

/// `(skill, workload, team_size, max_utility, deadline)` per requested skill.
pub fn requester(id: u32, at: Point, skills: &[(u16, f64, u32, f64, f64)]) -> RequesterProfile {
    RequesterProfile {
        id: RequesterId(id),
        skills: skills
            .iter()
            .map(|&(s, workload, team_size, max_utility, deadline)| RequestedSkill {
                skill: SkillId(s),
                workload,
                team_size,
                max_utility,
                deadline,
            })
            .collect(),
        location: at,
    }
}

/// One provider ten units away from one requester; the only sensible schedule
/// starts at 10 and is worth 900.
pub fn t1() -> Problem {
    let mut sp = provider(0, Point::new(0.0, 0.0), &[(0, 4.0, 1.0)]);
    sp.max_services = 1;
    Problem {
        num_skills: 1,
        providers: vec![sp],
        requesters: vec![requester(0, Point::new(10.0, 0.0), &[(0, 4.0, 1, 1000.0, 100.0)])],
        precedences: vec![],
    }
}

/// Two co-located providers, one per skill, serving a requester whose skill 1
/// must follow skill 0.
pub fn chain() -> Problem {
    let here = Point::new(0.0, 0.0);
    Problem {
        num_skills: 2,
        providers: vec![provider(0, here, &[(0, 2.0, 1.0)]), provider(1, here, &[(1, 2.0, 1.0)])],
        requesters: vec![requester(
            0,
            here,
            &[(0, 2.0, 1, 100.0, 50.0), (1, 2.0, 1, 100.0, 50.0)],
        )],
        precedences: vec![SkillPrecedence {
            requester: RequesterId(0),
            before: SkillId(0),
            after: SkillId(1),
        }],
    }
}
