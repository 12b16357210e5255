//! Domain types and utility evaluation.

mod precedence;
mod types;
mod utility;
mod validate;

pub use precedence::{
    completed_by, earliest_feasible_start, enforce_precedence, first_violation, predecessor_map,
    started_by,
};
pub use types::*;
pub use utility::{
    capability_factor, decay_factor, global_utility, requester_utility, segments_for,
    skill_utility, travel_time, work_time, Segment,
};
pub(crate) use utility::{segments_of_tuples, skill_value};
pub use validate::{validate_solution, Violation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("negative service start {0}")]
    NegativeStart(f64),
    #[error("deadline must be positive, got {0}")]
    InvalidDeadline(f64),
    #[error("{0} cannot provide {1}")]
    SkillNotProvidable(ProviderId, SkillId),
    #[error("{0} does not request {1}")]
    SkillNotRequested(RequesterId, SkillId),
    #[error("{requester}/{skill}: provided workload {provided} exceeds requested {requested}")]
    WorkloadExceeded {
        requester: RequesterId,
        skill: SkillId,
        provided: f64,
        requested: f64,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_solution_is_valid_and_worthless() {
        let p = fixtures::t1();
        let s = Solution::empty(&p);
        assert!(validate_solution(&s, &p).is_ok());
        assert_eq!(global_utility(&p, &s), 0.0);
        assert_eq!(requester_utility(&p, RequesterId(0), &s), 0.0);
    }

    #[test]
    fn t1_greedy_schedule_is_worth_900() {
        let p = fixtures::t1();
        let mut s = Solution::empty(&p);
        s.schedule_mut(ProviderId(0))
            .push(ServiceTuple::new(RequesterId(0), SkillId(0), 4.0, 10.0, 1.0));
        assert!(validate_solution(&s, &p).is_ok());
        assert!((global_utility(&p, &s) - 900.0).abs() < 1e-9);
        assert_eq!(global_utility(&p, &s), requester_utility(&p, RequesterId(0), &s));
    }

    #[test]
    fn two_skills_one_unserved() {
        let mut p = fixtures::t1();
        p.num_skills = 2;
        p.requesters[0].skills.push(RequestedSkill {
            skill: SkillId(1),
            workload: 2.0,
            team_size: 1,
            max_utility: 500.0,
            deadline: 100.0,
        });
        let mut s = Solution::empty(&p);
        s.schedule_mut(ProviderId(0))
            .push(ServiceTuple::new(RequesterId(0), SkillId(0), 4.0, 10.0, 1.0));
        assert!((requester_utility(&p, RequesterId(0), &s) - 900.0).abs() < 1e-9);
    }

    #[test]
    fn workload_exceeded_is_reported() {
        let mut p = fixtures::t1();
        p.providers[0].skills[0].workload = 10.0;
        let mut s = Solution::empty(&p);
        let sched = s.schedule_mut(ProviderId(0));
        sched.push(ServiceTuple::new(RequesterId(0), SkillId(0), 4.0, 10.0, 1.0));
        sched.push(ServiceTuple::new(RequesterId(0), SkillId(0), 2.0, 14.0, 1.0));
        let errs = validate_solution(&s, &p).unwrap_err();
        assert!(errs.iter().any(|v| v.to_string().contains("workload exceeded")));

        let mut p2 = fixtures::t1();
        p2.requesters[0].skills[0].workload = 10.0;
        let errs = validate_solution(&s, &p2).unwrap_err();
        assert!(errs
            .iter()
            .any(|v| matches!(v, Violation::ProviderWorkloadExceeded { .. })));
    }

    #[test]
    fn travel_and_duration_are_checked() {
        let p = fixtures::t1();
        let mut s = Solution::empty(&p);
        s.schedule_mut(ProviderId(0))
            .push(ServiceTuple::new(RequesterId(0), SkillId(0), 4.0, 5.0, 1.0));
        let errs = validate_solution(&s, &p).unwrap_err();
        assert!(errs.iter().any(|v| matches!(v, Violation::TravelInfeasible { .. })));

        let mut s = Solution::empty(&p);
        let mut t = ServiceTuple::new(RequesterId(0), SkillId(0), 4.0, 10.0, 1.0);
        t.finish = 11.0;
        s.schedule_mut(ProviderId(0)).push(t);
        let errs = validate_solution(&s, &p).unwrap_err();
        assert!(errs.iter().any(|v| matches!(v, Violation::WrongDuration { .. })));
    }

    #[test]
    fn missing_and_unknown_providers() {
        let p = fixtures::t1();
        let mut s = Solution::default();
        assert_eq!(
            validate_solution(&s, &p).unwrap_err(),
            vec![Violation::MissingProvider(ProviderId(0))]
        );
        s.schedules.insert(ProviderId(0), Schedule::default());
        s.schedules.insert(ProviderId(7), Schedule::default());
        assert_eq!(
            validate_solution(&s, &p).unwrap_err(),
            vec![Violation::UnknownProvider(ProviderId(7))]
        );
    }

    #[test]
    fn precedence_violation_flagged_and_repaired() {
        let p = fixtures::chain();
        let mut s = Solution::empty(&p);
        // upload (skill 1) starts before treatment (skill 0) finishes
        s.schedule_mut(ProviderId(0))
            .push(ServiceTuple::new(RequesterId(0), SkillId(0), 2.0, 0.0, 1.0));
        s.schedule_mut(ProviderId(1))
            .push(ServiceTuple::new(RequesterId(0), SkillId(1), 2.0, 1.0, 1.0));
        let errs = validate_solution(&s, &p).unwrap_err();
        assert!(errs.iter().any(|v| matches!(v, Violation::PrecedenceViolated { .. })));

        let repaired = enforce_precedence(&p, &s);
        assert!(validate_solution(&repaired, &p).is_ok());
        assert_eq!(repaired.num_services(), 1);

        // starting once treatment is done is fine
        let mut ok = Solution::empty(&p);
        ok.schedule_mut(ProviderId(0))
            .push(ServiceTuple::new(RequesterId(0), SkillId(0), 2.0, 0.0, 1.0));
        let start = earliest_feasible_start(&p, &ok, RequesterId(0), SkillId(1), 2.0, 0.0).unwrap();
        assert_eq!(start, 2.0);
        ok.schedule_mut(ProviderId(1))
            .push(ServiceTuple::new(RequesterId(0), SkillId(1), 2.0, start, 1.0));
        assert!(validate_solution(&ok, &p).is_ok());
    }

    #[test]
    fn merging_pushes_extend_contiguous_service() {
        let mut sched = Schedule::default();
        sched.push_merging(ServiceTuple::new(RequesterId(0), SkillId(0), 1.0, 0.0, 2.0));
        sched.push_merging(ServiceTuple::new(RequesterId(0), SkillId(0), 1.5, 2.0, 2.0));
        assert_eq!(sched.len(), 1);
        let t = sched.last_service().unwrap();
        assert_eq!((t.workload, t.start, t.finish), (2.5, 0.0, 5.0));
        sched.push_merging(ServiceTuple::new(RequesterId(1), SkillId(0), 1.0, 5.0, 2.0));
        assert_eq!(sched.len(), 2);
    }
}
