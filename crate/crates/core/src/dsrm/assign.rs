use crate::model::{travel_time, Point, ProviderId, RequesterId, ServiceTuple, SkillId, EPS};

use super::bids::{split_tuples, Offer};
use super::DsrmError;

/// Splits the requester's remaining workload evenly over the matched offers,
/// each starting at its offered start.
pub fn assign_providers(
    requester: RequesterId,
    remaining: f64,
    matched: &[Offer],
) -> Vec<(ProviderId, ServiceTuple)> {
    split_tuples(requester, remaining, matched)
}

/// What a provider was told to do this iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub requester: RequesterId,
    pub location: Point,
    pub skill: SkillId,
    pub workload: f64,
    pub rate: f64,
    /// Smallest partial commit worth making.
    pub epsilon: f64,
}

/// Where a provider is and when it is free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub position: Point,
    pub free: f64,
    pub speed: f64,
}

impl Motion {
    /// Start time of the assignment if the provider leaves no earlier than `t`.
    pub fn start_for(&self, t: f64, to: Point) -> f64 {
        self.free.max(t) + travel_time(self.position, to, self.speed)
    }
}

/// Executes the assignment between `t_last` and `t`: travel first, then work.
/// Returns the committed service, if any, and the provider's updated motion.
pub fn commit_partial(
    motion: Motion,
    assignment: &Assignment,
    t_last: f64,
    t: f64,
) -> Result<(Option<ServiceTuple>, Motion), DsrmError> {
    if t < t_last {
        return Err(DsrmError::NegativeElapsed { t_last, t });
    }
    let depart = motion.free.max(t_last);
    if depart >= t {
        return Ok((None, motion));
    }
    let travel = travel_time(motion.position, assignment.location, motion.speed);
    let arrive = depart + travel;
    if arrive >= t - EPS && arrive + assignment.rate * assignment.workload > t + EPS {
        let moved = motion.speed * (t - depart);
        let position = motion.position.toward(assignment.location, moved);
        return Ok((None, Motion { position, free: t, speed: motion.speed }));
    }
    let mut w = ((t - arrive) / assignment.rate).max(0.0);
    if w >= assignment.workload - EPS * assignment.workload.max(1.0) {
        w = assignment.workload;
    } else if w < assignment.epsilon {
        w = assignment.epsilon.min(assignment.workload);
    }
    let tuple = ServiceTuple::new(assignment.requester, assignment.skill, w, arrive, assignment.rate);
    Ok((
        Some(tuple),
        Motion { position: assignment.location, free: tuple.finish, speed: motion.speed },
    ))
}
