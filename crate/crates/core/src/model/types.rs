use std::fmt;

use serde::{Deserialize, Serialize};

/// Absolute tolerance used for all time and workload comparisons.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkillId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProviderId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequesterId(pub u32);

impl fmt::Display for SkillId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for ProviderId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SP{}", self.0)
    }
}

impl fmt::Display for RequesterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SR{}", self.0)
    }
}

impl ProviderId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RequesterId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point reached after moving `dist` units from `self` toward `to`.
    pub fn toward(self, to: Point, dist: f64) -> Point {
        let total = self.distance(to);
        if total <= EPS || dist >= total {
            return to;
        }
        let f = dist.max(0.0) / total;
        Point::new(self.x + (to.x - self.x) * f, self.y + (to.y - self.y) * f)
    }
}

/// One providable skill of a provider: how much of it is left to give and the
/// per-unit work time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProvidedSkill {
    pub skill: SkillId,
    pub workload: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderProfile {
    pub id: ProviderId,
    /// Sorted by skill id, one entry per providable skill.
    pub skills: Vec<ProvidedSkill>,
    pub max_services: usize,
    pub location: Point,
    pub speed: f64,
}

impl ProviderProfile {
    pub fn skill(&self, skill: SkillId) -> Option<&ProvidedSkill> {
        self.skills.iter().find(|p| p.skill == skill)
    }

    pub fn provides(&self, skill: SkillId) -> bool {
        self.skill(skill).is_some()
    }

    pub fn skill_ids(&self) -> impl Iterator<Item = SkillId> + '_ {
        self.skills.iter().map(|p| p.skill)
    }
}

/// One requested skill of a requester.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestedSkill {
    pub skill: SkillId,
    pub workload: f64,
    /// Optimal team size q*.
    pub team_size: u32,
    /// Utility u* of the full service delivered immediately by an optimal team.
    pub max_utility: f64,
    /// Latest useful time t_max; services starting at or after it are worthless.
    pub deadline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequesterProfile {
    pub id: RequesterId,
    /// Sorted by skill id, one entry per requested skill.
    pub skills: Vec<RequestedSkill>,
    pub location: Point,
}

impl RequesterProfile {
    pub fn skill(&self, skill: SkillId) -> Option<&RequestedSkill> {
        self.skills.iter().find(|r| r.skill == skill)
    }

    pub fn requests(&self, skill: SkillId) -> bool {
        self.skill(skill).is_some()
    }

    pub fn skill_ids(&self) -> impl Iterator<Item = SkillId> + '_ {
        self.skills.iter().map(|r| r.skill)
    }
}

/// Workload-flow ordering between two skills of one requester: at any instant the
/// workload of `after` that has started never exceeds the workload of `before`
/// that has finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkillPrecedence {
    pub requester: RequesterId,
    pub before: SkillId,
    pub after: SkillId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub num_skills: u16,
    pub providers: Vec<ProviderProfile>,
    pub requesters: Vec<RequesterProfile>,
    #[serde(default)]
    pub precedences: Vec<SkillPrecedence>,
}

impl Problem {
    pub fn provider(&self, id: ProviderId) -> &ProviderProfile {
        &self.providers[id.index()]
    }

    pub fn requester(&self, id: RequesterId) -> &RequesterProfile {
        &self.requesters[id.index()]
    }

    pub fn try_provider(&self, id: ProviderId) -> Option<&ProviderProfile> {
        self.providers.get(id.index()).filter(|p| p.id == id)
    }

    pub fn try_requester(&self, id: RequesterId) -> Option<&RequesterProfile> {
        self.requesters.get(id.index()).filter(|r| r.id == id)
    }

    /// Skills both agents share, ascending.
    pub fn joint_skills(&self, p: ProviderId, r: RequesterId) -> Vec<SkillId> {
        let req = self.requester(r);
        self.provider(p)
            .skill_ids()
            .filter(|s| req.requests(*s))
            .collect()
    }

    /// Skill required to precede `skill` at `requester`, if any.
    pub fn predecessor(&self, requester: RequesterId, skill: SkillId) -> Option<SkillId> {
        self.precedences
            .iter()
            .find(|p| p.requester == requester && p.after == skill)
            .map(|p| p.before)
    }

    /// Structural checks on a loaded instance.
    pub fn check(&self) -> Result<(), String> {
        for (i, p) in self.providers.iter().enumerate() {
            if p.id.index() != i {
                return Err(format!("provider at index {i} has id {}", p.id));
            }
            if !(p.speed > 0.0) {
                return Err(format!("{} has non-positive speed", p.id));
            }
            if p.max_services == 0 {
                return Err(format!("{} has zero max_services", p.id));
            }
            if !p.skills.windows(2).all(|w| w[0].skill < w[1].skill) {
                return Err(format!("{} skills not strictly sorted", p.id));
            }
            for s in &p.skills {
                if s.skill.0 >= self.num_skills {
                    return Err(format!("{} has out-of-range skill {}", p.id, s.skill));
                }
                if !(s.workload >= 0.0) || !(s.rate > 0.0) {
                    return Err(format!("{} has invalid workload or rate for {}", p.id, s.skill));
                }
            }
        }
        for (j, r) in self.requesters.iter().enumerate() {
            if r.id.index() != j {
                return Err(format!("requester at index {j} has id {}", r.id));
            }
            if !r.skills.windows(2).all(|w| w[0].skill < w[1].skill) {
                return Err(format!("{} skills not strictly sorted", r.id));
            }
            for s in &r.skills {
                if s.skill.0 >= self.num_skills {
                    return Err(format!("{} has out-of-range skill {}", r.id, s.skill));
                }
                if !(s.workload >= 0.0)
                    || s.team_size == 0
                    || !(s.max_utility > 0.0)
                    || !(s.deadline > 0.0)
                {
                    return Err(format!("{} has invalid parameters for {}", r.id, s.skill));
                }
            }
        }
        for pr in &self.precedences {
            let Some(r) = self.try_requester(pr.requester) else {
                return Err(format!("precedence references unknown {}", pr.requester));
            };
            if !r.requests(pr.before) || !r.requests(pr.after) {
                return Err(format!("precedence on unrequested skill at {}", pr.requester));
            }
        }
        Ok(())
    }
}

/// One scheduled service `<requester, skill, workload, start>`; `finish` is
/// derived from the provider's rate when the tuple is built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceTuple {
    pub requester: RequesterId,
    pub skill: SkillId,
    pub workload: f64,
    pub start: f64,
    pub finish: f64,
}

impl ServiceTuple {
    pub fn new(requester: RequesterId, skill: SkillId, workload: f64, start: f64, rate: f64) -> Self {
        Self {
            requester,
            skill,
            workload,
            start,
            finish: start + rate * workload,
        }
    }

    /// Whether the service interval `[start, finish)` contains `t`.
    pub fn active_at(&self, t: f64) -> bool {
        self.start <= t + EPS && t < self.finish - EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Slot {
    Service(ServiceTuple),
    /// Deliberate non-service assignment.
    Idle,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub slots: Vec<Slot>,
}

impl Schedule {
    pub fn services(&self) -> impl Iterator<Item = &ServiceTuple> + '_ {
        self.slots.iter().filter_map(|s| match s {
            Slot::Service(t) => Some(t),
            Slot::Idle => None,
        })
    }

    pub fn last_service(&self) -> Option<&ServiceTuple> {
        self.slots.iter().rev().find_map(|s| match s {
            Slot::Service(t) => Some(t),
            Slot::Idle => None,
        })
    }

    pub fn push(&mut self, tuple: ServiceTuple) {
        self.slots.push(Slot::Service(tuple));
    }

    /// Appends `tuple`, extending the last service instead when it continues the
    /// same requester and skill without a gap.
    pub fn push_merging(&mut self, tuple: ServiceTuple) {
        if let Some(Slot::Service(last)) = self.slots.last_mut() {
            if last.requester == tuple.requester
                && last.skill == tuple.skill
                && (last.finish - tuple.start).abs() <= EPS
            {
                last.workload += tuple.workload;
                last.finish = tuple.finish;
                return;
            }
        }
        self.push(tuple);
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// Every provider's ordered schedule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub schedules: std::collections::BTreeMap<ProviderId, Schedule>,
}

impl Solution {
    /// A solution with an empty schedule for every provider of `problem`.
    pub fn empty(problem: &Problem) -> Self {
        Self {
            schedules: problem
                .providers
                .iter()
                .map(|p| (p.id, Schedule::default()))
                .collect(),
        }
    }

    pub fn schedule(&self, p: ProviderId) -> Option<&Schedule> {
        self.schedules.get(&p)
    }

    pub fn schedule_mut(&mut self, p: ProviderId) -> &mut Schedule {
        self.schedules.entry(p).or_default()
    }

    /// All services as `(provider, tuple)` in provider then schedule order.
    pub fn services(&self) -> impl Iterator<Item = (ProviderId, &ServiceTuple)> + '_ {
        self.schedules
            .iter()
            .flat_map(|(p, s)| s.services().map(move |t| (*p, t)))
    }

    pub fn num_services(&self) -> usize {
        self.services().count()
    }
}
