//! Repeated parallel auctions. Providers propose workload and start times,
//! requesters answer with bids, providers schedule the highest bids first; the
//! exchange repeats from scratch every iteration until the messages stop
//! changing or the iteration cap is hit.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::{
    build_graph, Agent, AgentId, EngineError, Message, Network, Payload, StepContext, Trace,
};
use crate::model::{
    capability_factor, decay_factor, enforce_precedence, global_utility, travel_time, Point,
    Problem, ProviderId, ProviderProfile, RequesterId, RequesterProfile, Schedule, ServiceTuple,
    SkillId, Solution, EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpaConfig {
    pub iterations: usize,
    pub early_stop: bool,
}

impl Default for RpaConfig {
    fn default() -> Self {
        Self { iterations: 50, early_stop: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub sp: ProviderId,
    pub skill: SkillId,
    pub workload: f64,
    pub start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub sr: RequesterId,
    pub skill: SkillId,
    pub workload: f64,
    pub start: f64,
    pub bid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RpaMsg {
    Proposal(Proposal),
    Request(Request),
}

impl Payload for RpaMsg {
    fn kind(&self) -> &'static str {
        match self {
            RpaMsg::Proposal(_) => "proposal",
            RpaMsg::Request(_) => "request",
        }
    }
}

/// Utility per unit of useful workload if this proposal alone served the skill.
pub fn rpa_quality(requester: &RequesterProfile, p: &Proposal) -> f64 {
    let Some(req) = requester.skill(p.skill) else {
        return 0.0;
    };
    let w = p.workload.min(req.workload);
    if w <= EPS || req.workload <= 0.0 {
        return 0.0;
    }
    rpa_bid(requester, p.skill, w, p.start) / w
}

/// Utility the requester derives from `allocated` workload starting at `start`,
/// ignoring other providers.
pub fn rpa_bid(requester: &RequesterProfile, skill: SkillId, allocated: f64, start: f64) -> f64 {
    let Some(req) = requester.skill(skill) else {
        return 0.0;
    };
    let decay = decay_factor(start, req.deadline).unwrap_or(0.0);
    let frac = (allocated / req.workload).min(1.0);
    req.max_utility * frac * decay * capability_factor(1, req.team_size)
}

#[derive(Debug, Clone)]
pub struct SpState {
    profile: ProviderProfile,
    neighbors: Vec<(RequesterId, Point, Vec<SkillId>)>,
    schedule: Schedule,
}

impl SpState {
    pub fn new(problem: &Problem, id: ProviderId) -> Self {
        let profile = problem.provider(id).clone();
        let neighbors = problem
            .requesters
            .iter()
            .map(|r| (r.id, r.location, problem.joint_skills(id, r.id)))
            .filter(|(_, _, s)| !s.is_empty())
            .collect();
        Self { profile, neighbors, schedule: Schedule::default() }
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// One provider iteration: reset, schedule requests by descending bid until
    /// the first that cannot be met, then propose to every `(requester, skill)`
    /// that was not confirmed. Returns the outgoing proposals and the ops spent.
    pub fn sp_iteration(&mut self, requests: &[Request]) -> (Vec<(RequesterId, Proposal)>, u64) {
        let mut ops = 0u64;
        let mut remaining: BTreeMap<SkillId, f64> =
            self.profile.skills.iter().map(|s| (s.skill, s.workload)).collect();
        self.schedule = Schedule::default();
        let mut t_earliest = 0.0;
        let mut pos = self.profile.location;
        let mut out = Vec::new();
        let mut proposed = BTreeSet::new();

        let mut order: Vec<&Request> = requests
            .iter()
            .filter(|r| {
                let known = self.profile.provides(r.skill)
                    && self.neighbors.iter().any(|(id, _, s)| *id == r.sr && s.contains(&r.skill));
                if !known {
                    log::warn!("{} ignoring request for {} from {}", self.profile.id, r.skill, r.sr);
                }
                known
            })
            .collect();
        ops += crate::engine::sort_cost(order.len());
        order.sort_by(|a, b| {
            b.bid
                .total_cmp(&a.bid)
                .then(a.sr.cmp(&b.sr))
                .then(a.skill.cmp(&b.skill))
        });

        for r in order {
            ops += 2;
            if self.schedule.len() >= self.profile.max_services {
                break;
            }
            let loc = self.location_of(r.sr);
            let arrive = t_earliest + travel_time(pos, loc, self.profile.speed);
            let left = remaining[&r.skill];
            if arrive > r.start + EPS || left + EPS < r.workload {
                break;
            }
            let rate = self.profile.skill(r.skill).map_or(0.0, |s| s.rate);
            let w = r.workload.min(left);
            let tuple = ServiceTuple::new(r.sr, r.skill, w, arrive, rate);
            self.schedule.push(tuple);
            out.push((r.sr, Proposal { sp: self.profile.id, skill: r.skill, workload: left, start: arrive }));
            proposed.insert((r.sr, r.skill));
            remaining.insert(r.skill, (left - w).max(0.0));
            t_earliest = tuple.finish;
            pos = loc;
        }

        for (sr, loc, skills) in &self.neighbors {
            for &s in skills {
                if proposed.contains(&(*sr, s)) {
                    continue;
                }
                ops += 1;
                out.push((
                    *sr,
                    Proposal {
                        sp: self.profile.id,
                        skill: s,
                        workload: remaining[&s],
                        start: t_earliest + travel_time(pos, *loc, self.profile.speed),
                    },
                ));
            }
        }
        (out, ops)
    }

    fn location_of(&self, r: RequesterId) -> Point {
        self.neighbors
            .iter()
            .find(|(id, _, _)| *id == r)
            .map_or(self.profile.location, |(_, l, _)| *l)
    }
}

#[derive(Debug, Clone)]
pub struct SrState {
    profile: RequesterProfile,
}

impl SrState {
    pub fn new(problem: &Problem, id: RequesterId) -> Self {
        Self { profile: problem.requester(id).clone() }
    }

    /// One requester iteration: per skill, walk proposals by descending quality
    /// and request `min(proposed, still needed)` from each until satisfied.
    pub fn sr_iteration(&self, proposals: &[Proposal]) -> (Vec<(ProviderId, Request)>, u64) {
        let mut ops = 0u64;
        let mut out = Vec::new();
        for req in &self.profile.skills {
            let mut cands: Vec<(f64, &Proposal)> = proposals
                .iter()
                .filter(|p| p.skill == req.skill)
                .map(|p| (rpa_quality(&self.profile, p), p))
                .collect();
            ops += cands.len() as u64 + crate::engine::sort_cost(cands.len());
            cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.sp.cmp(&b.1.sp)));
            let mut remaining = req.workload;
            for (_, p) in cands {
                ops += 2;
                if remaining <= EPS {
                    break;
                }
                if p.workload <= EPS {
                    continue;
                }
                let w = p.workload.min(remaining);
                let bid = rpa_bid(&self.profile, req.skill, w, p.start);
                if bid <= 0.0 {
                    continue;
                }
                out.push((
                    p.sp,
                    Request { sr: self.profile.id, skill: req.skill, workload: w, start: p.start, bid },
                ));
                remaining -= w;
            }
        }
        (out, ops)
    }
}

#[derive(Debug, Clone)]
pub enum RpaAgent {
    Sp(SpState),
    Sr(SrState),
}

impl Agent for RpaAgent {
    type Msg = RpaMsg;
    type Error = EngineError;

    fn id(&self) -> AgentId {
        match self {
            RpaAgent::Sp(s) => s.profile.id.into(),
            RpaAgent::Sr(s) => s.profile.id.into(),
        }
    }

    fn step(&mut self, inbox: &[Message<RpaMsg>], ctx: &mut StepContext<'_, RpaMsg>) -> Result<(), EngineError> {
        let provider_turn = ctx.round() % 2 == 1;
        ctx.charge(inbox.len() as u64);
        match self {
            RpaAgent::Sp(sp) if provider_turn => {
                let requests: Vec<Request> = inbox
                    .iter()
                    .filter_map(|m| match m.payload {
                        RpaMsg::Request(r) => Some(r),
                        RpaMsg::Proposal(_) => None,
                    })
                    .collect();
                let (out, ops) = sp.sp_iteration(&requests);
                ctx.charge(ops.max(1));
                for (to, p) in out {
                    ctx.send(to, RpaMsg::Proposal(p))?;
                }
            }
            RpaAgent::Sr(sr) if !provider_turn => {
                let proposals: Vec<Proposal> = inbox
                    .iter()
                    .filter_map(|m| match m.payload {
                        RpaMsg::Proposal(p) => Some(p),
                        RpaMsg::Request(_) => None,
                    })
                    .collect();
                let (out, ops) = sr.sr_iteration(&proposals);
                ctx.charge(ops.max(1));
                for (to, r) in out {
                    ctx.send(to, RpaMsg::Request(r))?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RpaOutcome {
    pub trace: Trace,
    pub solution: Solution,
    /// Full propose/request iterations executed.
    pub iterations: usize,
    /// Whether two consecutive iterations exchanged identical messages.
    pub converged: bool,
    /// Scheduling iterations until the messages stopped changing. The opening
    /// round, where providers propose without having received any request,
    /// is not counted.
    pub fixpoint: Option<usize>,
}

fn snapshot(net: &Network<RpaAgent>) -> Vec<(AgentId, AgentId, RpaMsg)> {
    net.in_flight().iter().map(|m| (m.from, m.to, m.payload)).collect()
}

fn current_solution(net: &Network<RpaAgent>) -> Solution {
    Solution {
        schedules: net
            .agents()
            .iter()
            .filter_map(|a| match a {
                RpaAgent::Sp(s) => Some((s.profile.id, s.schedule.clone())),
                RpaAgent::Sr(_) => None,
            })
            .collect(),
    }
}

pub fn run_rpa(problem: &Problem, config: &RpaConfig) -> Result<RpaOutcome, EngineError> {
    run_rpa_scored(problem, config, |s| global_utility(problem, s))
}

/// Like [`run_rpa`], with trace samples scored by `score` instead of the model
/// utility.
pub fn run_rpa_scored(
    problem: &Problem,
    config: &RpaConfig,
    score: impl Fn(&Solution) -> f64,
) -> Result<RpaOutcome, EngineError> {
    let agents = problem
        .providers
        .iter()
        .map(|p| RpaAgent::Sp(SpState::new(problem, p.id)))
        .chain(problem.requesters.iter().map(|r| RpaAgent::Sr(SrState::new(problem, r.id))))
        .collect();
    let mut net = Network::new(build_graph(problem), agents)?;
    let mut trace = Trace::default();
    trace.push(0, score(&Solution::empty(problem)));
    let mut prev = None;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..config.iterations.max(1) {
        net.run_round()?;
        trace.push(net.global_nclo(), score(&current_solution(&net)));
        let proposals = snapshot(&net);
        net.run_round()?;
        iterations += 1;
        let exchanged = (proposals, snapshot(&net));
        if config.early_stop && prev.as_ref() == Some(&exchanged) {
            converged = true;
            break;
        }
        prev = Some(exchanged);
    }
    net.run_round()?;
    let solution = enforce_precedence(problem, &current_solution(&net));
    trace.push(net.global_nclo(), score(&solution));
    let fixpoint = converged.then(|| (iterations - 1).max(2) - 1);
    Ok(RpaOutcome { trace, solution, iterations, converged, fixpoint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, provider, requester};
    use crate::model::validate_solution;

    fn single(w_p: f64, rate: f64) -> Problem {
        let o = Point::default();
        Problem {
            num_skills: 1,
            providers: vec![provider(0, o, &[(0, w_p, rate)])],
            requesters: vec![
                requester(0, o, &[(0, 10.0, 1, 1000.0, 100.0)]),
                requester(1, o, &[(0, 10.0, 1, 1000.0, 100.0)]),
                requester(2, o, &[(0, 10.0, 1, 1000.0, 100.0)]),
            ],
            precedences: vec![],
        }
    }

    fn req(sr: u32, start: f64, w: f64, bid: f64) -> Request {
        Request { sr: RequesterId(sr), skill: SkillId(0), workload: w, start, bid }
    }

    #[test]
    fn first_iteration_proposes_everything() {
        let p = fixtures::t1();
        let mut sp = SpState::new(&p, ProviderId(0));
        let (out, _) = sp.sp_iteration(&[]);
        assert_eq!(out.len(), 1);
        let (to, prop) = out[0];
        assert_eq!(to, RequesterId(0));
        assert_eq!((prop.workload, prop.start), (4.0, 10.0));
        assert!(sp.schedule().is_empty());
    }

    #[test]
    fn bids_scheduled_in_order_until_first_failure() {
        let p = single(4.0, 1.0);
        let mut sp = SpState::new(&p, ProviderId(0));
        let (out, _) = sp.sp_iteration(&[req(0, 5.0, 2.0, 10.0), req(1, 3.0, 2.0, 7.0)]);
        let spans: Vec<_> = sp.schedule().services().map(|t| (t.start, t.finish)).collect();
        assert_eq!(spans, vec![(0.0, 2.0), (2.0, 4.0)]);
        // confirmations carry the workload available before deduction
        assert_eq!(out[0].1.workload, 4.0);
        assert_eq!(out[1].1.workload, 2.0);

        let (out, _) = sp.sp_iteration(&[
            req(0, 5.0, 2.0, 10.0),
            req(1, 3.0, 2.0, 7.0),
            req(2, 1.0, 1.0, 5.0),
        ]);
        assert_eq!(sp.schedule().len(), 2);
        let follow = out.iter().find(|(r, _)| *r == RequesterId(2)).unwrap().1;
        assert_eq!((follow.start, follow.workload), (4.0, 0.0));
    }

    #[test]
    fn requester_allocations_follow_min_rule() {
        let sr = SrState {
            profile: requester(0, Point::default(), &[(0, 4.0, 1, 1000.0, 100.0)]),
        };
        let props = [
            Proposal { sp: ProviderId(0), skill: SkillId(0), workload: 3.0, start: 0.0 },
            Proposal { sp: ProviderId(1), skill: SkillId(0), workload: 3.0, start: 1.0 },
        ];
        let (out, _) = sr.sr_iteration(&props);
        let ws: Vec<f64> = out.iter().map(|(_, r)| r.workload).collect();
        assert_eq!(ws, vec![3.0, 1.0]);
        let (out, _) = sr.sr_iteration(&props[..0]);
        assert!(out.is_empty());
        let full = [Proposal { sp: ProviderId(0), skill: SkillId(0), workload: 4.0, start: 0.0 }];
        assert_eq!(sr.sr_iteration(&full).0.len(), 1);
    }

    #[test]
    fn quality_and_bid_examples() {
        let r = requester(0, Point::default(), &[(0, 4.0, 1, 1000.0, 100.0)]);
        let p = |start| Proposal { sp: ProviderId(0), skill: SkillId(0), workload: 4.0, start };
        assert_eq!(rpa_quality(&r, &p(0.0)), 250.0);
        assert!(rpa_quality(&r, &p(1.0)) > rpa_quality(&r, &p(2.0)));
        assert_eq!(rpa_quality(&r, &p(100.0)), 0.0);
        assert_eq!(rpa_bid(&r, SkillId(0), 4.0, 0.0), 1000.0);
        assert!(rpa_bid(&r, SkillId(0), 2.0, 3.0) > rpa_bid(&r, SkillId(0), 2.0, 7.0));
        assert_eq!(rpa_bid(&r, SkillId(0), 4.0, 100.0), 0.0);
    }

    #[test]
    fn t1_reaches_900() {
        let p = fixtures::t1();
        let out = run_rpa(&p, &RpaConfig::default()).unwrap();
        assert!(out.converged);
        assert!((out.trace.final_utility() - 900.0).abs() < 1e-9);
        assert!(validate_solution(&out.solution, &p).is_ok());
    }

    #[test]
    fn one_iteration_uses_first_requests() {
        let p = fixtures::t1();
        let out = run_rpa(&p, &RpaConfig { iterations: 1, early_stop: true }).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.solution.num_services(), 1);
    }
}
