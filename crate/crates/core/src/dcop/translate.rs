//! Provider-only constraint formulation of a problem.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::DcopError;
use crate::model::{
    enforce_precedence, segments_for, segments_of_tuples, skill_value, travel_time, Problem, ProviderId, RequesterId,
    ServiceTuple, SkillId, Solution, EPS,
};

/// Share of the still-available workload a service value asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granule {
    Full,
    Half,
}

impl Granule {
    pub fn fraction(self) -> f64 {
        match self {
            Granule::Full => 1.0,
            Granule::Half => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DcopValue {
    Idle,
    /// Serve `requester` with `skill`, starting at `not_before` or on arrival,
    /// whichever is later.
    Service {
        requester: RequesterId,
        skill: SkillId,
        granule: Granule,
        not_before: f64,
    },
}

/// The `slot`-th service decision of a provider.
#[derive(Debug, Clone, PartialEq)]
pub struct DcopVariable {
    pub owner: ProviderId,
    pub slot: usize,
    /// `Idle` first, then service values.
    pub domain: Vec<DcopValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstraintId(pub usize);

/// Utility of the requested skills of one requester that are tied together by
/// precedences (a single skill when there are none), over every provider able
/// to serve one of them.
#[derive(Debug, Clone, PartialEq)]
pub struct DcopConstraint {
    pub id: ConstraintId,
    pub requester: RequesterId,
    pub skills: Vec<SkillId>,
    pub scope: Vec<ProviderId>,
}

/// A service implied by one slot, before requester-side trimming.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RawService {
    pub provider: ProviderId,
    pub slot: usize,
    pub rate: f64,
    pub tuple: ServiceTuple,
}

/// Value index per slot, for the providers that take part.
pub type Assignment = BTreeMap<ProviderId, Vec<usize>>;

#[derive(Debug, Clone)]
pub struct Dcop {
    pub problem: Problem,
    pub grid: Vec<f64>,
    /// Indexed by provider.
    pub variables: Vec<Vec<DcopVariable>>,
    pub constraints: Vec<DcopConstraint>,
    /// Constraints each provider appears in, indexed by provider.
    pub constraints_of: Vec<Vec<ConstraintId>>,
    /// Providers sharing a constraint, indexed by provider.
    pub neighbors: Vec<Vec<ProviderId>>,
}

/// Candidate start times: zero, every arrival time, and every completion time
/// followed by a further trip, thinned evenly to at most `cap` points.
pub fn default_time_grid(problem: &Problem, cap: usize) -> Vec<f64> {
    let mut pts = vec![0.0];
    for p in &problem.providers {
        for r in &problem.requesters {
            let joint = problem.joint_skills(p.id, r.id);
            if joint.is_empty() {
                continue;
            }
            let arrive = travel_time(p.location, r.location, p.speed);
            pts.push(arrive);
            for s in joint {
                let (Some(ps), Some(rs)) = (p.skill(s), r.skill(s)) else {
                    continue;
                };
                let done = arrive + ps.rate * ps.workload.min(rs.workload);
                pts.push(done);
                pts.extend(
                    problem
                        .requesters
                        .iter()
                        .filter(|o| o.id != r.id)
                        .map(|o| done + travel_time(r.location, o.location, p.speed)),
                );
            }
        }
    }
    pts.retain(|t| t.is_finite());
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= EPS);
    if pts.len() <= cap {
        return pts;
    }
    match cap {
        0 => Vec::new(),
        1 => vec![pts[0]],
        _ => (0..cap)
            .map(|k| pts[(k * (pts.len() - 1) + (cap - 1) / 2) / (cap - 1)])
            .collect(),
    }
}

/// Skills of `r` grouped by the precedence chains linking them.
fn clusters(problem: &Problem, r: RequesterId) -> Vec<Vec<SkillId>> {
    let skills: Vec<SkillId> = problem.requester(r).skill_ids().collect();
    let mut label: BTreeMap<SkillId, usize> = skills.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    loop {
        let mut changed = false;
        for pr in problem.precedences.iter().filter(|p| p.requester == r) {
            let (Some(&a), Some(&b)) = (label.get(&pr.before), label.get(&pr.after)) else {
                continue;
            };
            if a != b {
                let lo = a.min(b);
                for v in label.values_mut() {
                    if *v == a || *v == b {
                        *v = lo;
                    }
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut groups: BTreeMap<usize, Vec<SkillId>> = BTreeMap::new();
    for (s, l) in label {
        groups.entry(l).or_default().push(s);
    }
    groups.into_values().collect()
}

/// Builds variables, domains, constraints and the provider neighborhood.
pub fn translate_to_dcop(problem: &Problem, time_grid: &[f64], slots: usize) -> Result<Dcop, DcopError> {
    if time_grid.is_empty() {
        return Err(DcopError::EmptyGrid);
    }
    let mut grid = time_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= EPS);

    let mut constraints = Vec::new();
    for r in &problem.requesters {
        for skills in clusters(problem, r.id) {
            let scope: Vec<ProviderId> = problem
                .providers
                .iter()
                .filter(|p| skills.iter().any(|s| p.skill(*s).is_some_and(|x| x.workload > EPS)))
                .map(|p| p.id)
                .collect();
            if scope.is_empty() {
                continue;
            }
            let id = ConstraintId(constraints.len());
            constraints.push(DcopConstraint { id, requester: r.id, skills, scope });
        }
    }
    let n = problem.providers.len();
    let mut constraints_of = vec![Vec::new(); n];
    let mut neighbor_sets = vec![BTreeSet::new(); n];
    for c in &constraints {
        for &p in &c.scope {
            constraints_of[p.index()].push(c.id);
            neighbor_sets[p.index()].extend(c.scope.iter().copied().filter(|&q| q != p));
        }
    }

    let variables = problem
        .providers
        .iter()
        .map(|p| {
            let mut domain = vec![DcopValue::Idle];
            for r in &problem.requesters {
                for s in problem.joint_skills(p.id, r.id) {
                    let (Some(ps), Some(rs)) = (p.skill(s), r.skill(s)) else {
                        continue;
                    };
                    if ps.workload <= EPS || rs.workload <= EPS {
                        continue;
                    }
                    for granule in [Granule::Full, Granule::Half] {
                        domain.extend(grid.iter().filter(|&&t| t < rs.deadline).map(|&t| {
                            DcopValue::Service { requester: r.id, skill: s, granule, not_before: t }
                        }));
                    }
                }
            }
            (0..slots.min(p.max_services))
                .map(|slot| DcopVariable { owner: p.id, slot, domain: domain.clone() })
                .collect()
        })
        .collect();

    Ok(Dcop {
        problem: problem.clone(),
        grid,
        variables,
        constraints,
        constraints_of,
        neighbors: neighbor_sets.into_iter().map(|s| s.into_iter().collect()).collect(),
    })
}

impl Dcop {
    pub fn variables_of(&self, p: ProviderId) -> &[DcopVariable] {
        &self.variables[p.index()]
    }

    pub fn neighbors_of(&self, p: ProviderId) -> &[ProviderId] {
        &self.neighbors[p.index()]
    }

    pub fn constraints_of(&self, p: ProviderId) -> &[ConstraintId] {
        &self.constraints_of[p.index()]
    }

    pub fn constraint(&self, c: ConstraintId) -> &DcopConstraint {
        &self.constraints[c.0]
    }

    /// Every provider idle.
    pub fn idle_assignment(&self) -> Assignment {
        self.problem
            .providers
            .iter()
            .map(|p| (p.id, vec![0; self.variables[p.id.index()].len()]))
            .collect()
    }

    /// Untrimmed services of one provider: slots are served in order,
    /// travelling between requesters, each taking its granule of what the
    /// provider still has.
    pub(crate) fn provider_services(&self, p: ProviderId, values: &[usize], out: &mut Vec<RawService>) {
        let problem = &self.problem;
        let prof = problem.provider(p);
        let vars = &self.variables[p.index()];
        let mut left: Vec<(SkillId, f64)> = prof.skills.iter().map(|s| (s.skill, s.workload)).collect();
        let mut at = prof.location;
        let mut free = 0.0;
        for (slot, &vi) in values.iter().enumerate().take(vars.len()) {
            let Some(&DcopValue::Service { requester, skill, granule, not_before }) =
                vars[slot].domain.get(vi)
            else {
                continue;
            };
            let req = problem.requester(requester);
            let (Some(rs), Some(ps)) = (req.skill(skill), prof.skill(skill)) else {
                continue;
            };
            let Some((_, rem)) = left.iter_mut().find(|(s, _)| *s == skill) else {
                continue;
            };
            let w = rem.min(rs.workload) * granule.fraction();
            if w <= EPS {
                continue;
            }
            let start = not_before.max(free + travel_time(at, req.location, prof.speed));
            let tuple = ServiceTuple::new(requester, skill, w, start, ps.rate);
            *rem -= w;
            at = req.location;
            free = tuple.finish;
            out.push(RawService { provider: p, slot, rate: ps.rate, tuple });
        }
    }

    /// Trims services beyond each requester's remaining workload, earliest
    /// first. Leaves `raw` sorted by start.
    fn clip(&self, raw: &mut [RawService]) {
        raw.sort_by(|x, y| {
            x.tuple
                .start
                .total_cmp(&y.tuple.start)
                .then(x.provider.cmp(&y.provider))
                .then(x.slot.cmp(&y.slot))
        });
        let mut used: Vec<((RequesterId, SkillId), f64)> = Vec::new();
        for r in raw.iter_mut() {
            let t = &mut r.tuple;
            let want = self.problem.requester(t.requester).skill(t.skill).map_or(0.0, |s| s.workload);
            let key = (t.requester, t.skill);
            let u = match used.iter().position(|(k, _)| *k == key) {
                Some(i) => &mut used[i].1,
                None => {
                    used.push((key, 0.0));
                    &mut used.last_mut().expect("just pushed").1
                }
            };
            let cap = (want - *u).max(0.0);
            if t.workload > cap {
                t.workload = cap;
                t.finish = t.start + r.rate * cap;
            }
            *u += t.workload;
        }
    }

    fn settle(&self, mut raw: Vec<RawService>, base: Solution) -> Solution {
        self.clip(&mut raw);
        raw.sort_by(|x, y| x.provider.cmp(&y.provider).then(x.slot.cmp(&y.slot)));
        let mut solution = base;
        for r in raw {
            if r.tuple.workload > EPS {
                solution.schedule_mut(r.provider).push(r.tuple);
            }
        }
        enforce_precedence(&self.problem, &solution)
    }

    /// Schedules implied by the assignments of the listed providers. Each
    /// provider serves its slots in order, travelling between requesters;
    /// services beyond a requester's remaining workload are trimmed earliest
    /// first, and precedences are then repaired.
    pub fn materialize(&self, assignment: &Assignment) -> Solution {
        let mut raw = Vec::new();
        for (&p, values) in assignment {
            self.provider_services(p, values, &mut raw);
        }
        self.settle(raw, Solution::empty(&self.problem))
    }

    /// Whether a service counts towards constraint `c`.
    pub(crate) fn touches(&self, c: ConstraintId, t: &ServiceTuple) -> bool {
        let con = &self.constraints[c.0];
        con.requester == t.requester && con.skills.contains(&t.skill)
    }

    /// Value of `c` given every untrimmed service touching it. Equal to
    /// [`Dcop::constraint_value`] of the full materialized schedule.
    pub(crate) fn cluster_value(&self, c: ConstraintId, mut raw: Vec<RawService>) -> f64 {
        let con = &self.constraints[c.0];
        if con.skills.len() > 1 {
            return self.constraint_value(c, &self.settle(raw, Solution::default()));
        }
        self.clip(&mut raw);
        raw.retain(|r| r.tuple.workload > EPS);
        raw.sort_by(|x, y| x.provider.cmp(&y.provider).then(x.slot.cmp(&y.slot)));
        let Some(rs) = self.problem.requester(con.requester).skill(con.skills[0]) else {
            return 0.0;
        };
        let tuples: Vec<(ProviderId, &ServiceTuple)> = raw.iter().map(|r| (r.provider, &r.tuple)).collect();
        skill_value(rs, &segments_of_tuples(&tuples))
    }

    /// Utility of one constraint under a solution.
    pub fn constraint_value(&self, c: ConstraintId, solution: &Solution) -> f64 {
        let con = &self.constraints[c.0];
        let req = self.problem.requester(con.requester);
        con.skills
            .iter()
            .filter_map(|&s| {
                let rs = req.skill(s)?;
                Some(skill_value(rs, &segments_for(solution, con.requester, s)))
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{global_utility, validate_solution, Point};

    #[test]
    fn empty_grid_is_an_error() {
        assert!(matches!(
            translate_to_dcop(&fixtures::t1(), &[], 2),
            Err(DcopError::EmptyGrid)
        ));
    }

    #[test]
    fn t1_domain_is_grid_times_granules_plus_idle() {
        let p = fixtures::t1();
        let grid = [0.0, 10.0, 14.0];
        let d = translate_to_dcop(&p, &grid, 2).unwrap();
        // max_services is 1 in this fixture
        assert_eq!(d.variables_of(ProviderId(0)).len(), 1);
        let dom = &d.variables_of(ProviderId(0))[0].domain;
        assert_eq!(dom.len(), 1 + 2 * grid.len());
        assert_eq!(dom[0], DcopValue::Idle);
        assert_eq!(d.constraints.len(), 1);
        assert!(d.neighbors_of(ProviderId(0)).is_empty());
    }

    #[test]
    fn sharing_a_pair_makes_neighbors() {
        let p = Problem {
            num_skills: 2,
            providers: vec![
                fixtures::provider(0, Point::new(0.0, 0.0), &[(0, 2.0, 1.0)]),
                fixtures::provider(1, Point::new(1.0, 0.0), &[(0, 2.0, 1.0)]),
                fixtures::provider(2, Point::new(2.0, 0.0), &[(1, 2.0, 1.0)]),
            ],
            requesters: vec![fixtures::requester(
                0,
                Point::new(5.0, 0.0),
                &[(0, 4.0, 2, 100.0, 50.0), (1, 2.0, 1, 100.0, 50.0)],
            )],
            precedences: vec![],
        };
        let d = translate_to_dcop(&p, &default_time_grid(&p, 32), 2).unwrap();
        assert_eq!(d.neighbors_of(ProviderId(0)), &[ProviderId(1)]);
        assert!(d.neighbors_of(ProviderId(2)).is_empty());
        assert_eq!(d.constraints.len(), 2);
    }

    #[test]
    fn precedence_chain_forms_one_constraint() {
        let p = fixtures::chain();
        let d = translate_to_dcop(&p, &[0.0, 2.0], 2).unwrap();
        assert_eq!(d.constraints.len(), 1);
        assert_eq!(d.constraints[0].skills, vec![SkillId(0), SkillId(1)]);
        assert_eq!(d.neighbors_of(ProviderId(0)), &[ProviderId(1)]);
    }

    #[test]
    fn grid_is_capped_and_starts_at_zero() {
        let p = crate::scenarios::gen_abstract(&crate::scenarios::AbstractConfig::sized(10, 4, 3))
            .unwrap();
        let g = default_time_grid(&p, 32);
        assert!(g.len() <= 32 && g[0] == 0.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_time_grid(&p, 1), vec![0.0]);
    }

    #[test]
    fn materialize_respects_travel_and_workloads() {
        let p = fixtures::t1();
        let d = translate_to_dcop(&p, &[0.0, 20.0], 1).unwrap();
        let dom = &d.variables_of(ProviderId(0))[0].domain;
        let full_now = dom
            .iter()
            .position(|v| matches!(v, DcopValue::Service { granule: Granule::Full, not_before, .. } if *not_before == 0.0))
            .unwrap();
        let s = d.materialize(&Assignment::from([(ProviderId(0), vec![full_now])]));
        assert!(validate_solution(&s, &p).is_ok());
        let t = s.services().next().unwrap().1;
        assert_eq!((t.start, t.workload), (10.0, 4.0));
        assert!((global_utility(&p, &s) - 900.0).abs() < 1e-9);
        let total: f64 = d.constraints.iter().map(|c| d.constraint_value(c.id, &s)).sum();
        assert!((total - 900.0).abs() < 1e-9);
    }

    #[test]
    fn overlapping_services_are_trimmed() {
        let p = Problem {
            num_skills: 1,
            providers: vec![
                fixtures::provider(0, Point::new(0.0, 0.0), &[(0, 4.0, 1.0)]),
                fixtures::provider(1, Point::new(0.0, 0.0), &[(0, 4.0, 1.0)]),
            ],
            requesters: vec![fixtures::requester(0, Point::new(1.0, 0.0), &[(0, 5.0, 2, 100.0, 50.0)])],
            precedences: vec![],
        };
        let d = translate_to_dcop(&p, &[0.0], 1).unwrap();
        // value 1 is full at grid zero
        let s = d.materialize(&Assignment::from([(ProviderId(0), vec![1]), (ProviderId(1), vec![1])]));
        assert!(validate_solution(&s, &p).is_ok());
        let total: f64 = s.services().map(|(_, t)| t.workload).sum();
        assert!((total - 5.0).abs() < 1e-9);
    }
}
