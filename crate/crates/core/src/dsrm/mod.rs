//! Distributed simulated repeated matching. Each outer iteration matches
//! providers to `(requester, skill)` slots by distributed deferred acceptance,
//! spreads every slot's remaining workload over its matched providers, floods
//! the earliest completion time and commits whatever each provider finishes by
//! then. Committed work is never revoked, so utility only grows.
//!
//! Phases are separated by a synchronizer: the driver waits until no message is
//! in flight before starting the next phase.

mod assign;
mod bids;
mod matching;
mod mintime;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::{
    build_graph, Agent, AgentId, EngineError, Message, Network, Payload, StepContext, Trace,
};
use crate::model::{
    global_utility, Point, Problem, ProviderId, ProviderProfile, RequesterId, RequesterProfile,
    Schedule, ServiceTuple, SkillId, Solution, EPS,
};

pub use assign::{assign_providers, commit_partial, Assignment, Motion};
pub use bids::{bid_simple, bid_truncated, even_split, split_utility, BidMode, Offer};
pub use matching::{
    blocking_pairs, dgs_round, run_dgs_matching, slot_prefers, BidTable, DgsOutcome,
    DgsProposer, DgsSlot, GsMsg, MatchSlot, Matching, SlotId, SlotResponse,
};
pub use mintime::{min_finish_time, MinFlood, MinTime, MinTimeOutcome};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DsrmError {
    #[error("commit window ends at {t} before it starts at {t_last}")]
    NegativeElapsed { t_last: f64, t: f64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DsrmConfig {
    pub bid_mode: BidMode,
    /// Smallest partial commit as a fraction of a skill's requested workload.
    pub epsilon: f64,
    /// Safety valve; defaults to `10 * n * m * k`.
    pub max_outer_iterations: Option<usize>,
}

impl Default for DsrmConfig {
    fn default() -> Self {
        Self { bid_mode: BidMode::Truncated, epsilon: 1e-3, max_outer_iterations: None }
    }
}

impl DsrmConfig {
    pub fn with_mode(bid_mode: BidMode) -> Self {
        Self { bid_mode, ..Self::default() }
    }
}

/// Simulated time of one agent: now, and the previous commit instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimClock {
    pub t: f64,
    pub t_last: f64,
}

impl SimClock {
    pub fn advance(&mut self, t: f64) {
        if t > self.t {
            self.t_last = self.t;
            self.t = t;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DsrmMsg {
    Proposal(Offer),
    Bid { skill: SkillId, value: f64 },
    Gs(GsMsg),
    Assignment { skill: SkillId, workload: f64, epsilon: f64 },
    MinTime(f64),
    Commit(ServiceTuple),
}

impl Payload for DsrmMsg {
    fn kind(&self) -> &'static str {
        match self {
            DsrmMsg::Proposal(_) => "proposal",
            DsrmMsg::Bid { .. } => "bid",
            DsrmMsg::Gs(g) => g.kind(),
            DsrmMsg::Assignment { .. } => "assignment",
            DsrmMsg::MinTime(_) => "min_time",
            DsrmMsg::Commit(_) => "commit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Offer,
    Assign,
    Flood,
    Commit,
}

#[derive(Debug, Clone)]
struct ProviderAgent {
    profile: ProviderProfile,
    neighbors: Vec<(RequesterId, Point, Vec<SkillId>)>,
    remaining: BTreeMap<SkillId, f64>,
    motion: Motion,
    clock: SimClock,
    schedule: Schedule,
    /// Pairs tied by a precedence. Their pieces are kept apart so that the
    /// flow of finished and started workload stays exact.
    ordered: BTreeSet<(RequesterId, SkillId)>,
    phase: Phase,
    kicked: bool,
    received_bids: Vec<(SlotId, f64)>,
    proposer: DgsProposer,
    assignment: Option<Assignment>,
    flood: MinFlood,
}

impl ProviderAgent {
    fn new(problem: &Problem, id: ProviderId) -> Self {
        let profile = problem.provider(id).clone();
        let neighbors = problem
            .requesters
            .iter()
            .map(|r| (r.id, r.location, problem.joint_skills(id, r.id)))
            .filter(|(_, _, s)| !s.is_empty())
            .collect();
        Self {
            remaining: profile.skills.iter().map(|s| (s.skill, s.workload)).collect(),
            motion: Motion { position: profile.location, free: 0.0, speed: profile.speed },
            profile,
            neighbors,
            clock: SimClock::default(),
            schedule: Schedule::default(),
            ordered: problem
                .precedences
                .iter()
                .flat_map(|p| [(p.requester, p.before), (p.requester, p.after)])
                .collect(),
            phase: Phase::Idle,
            kicked: false,
            received_bids: Vec::new(),
            proposer: DgsProposer::default(),
            assignment: None,
            flood: MinFlood::new(f64::INFINITY),
        }
    }

    /// A full schedule only admits work that extends its last service.
    fn has_room(&self, r: RequesterId, s: SkillId, start: f64) -> bool {
        if self.schedule.len() < self.profile.max_services {
            return true;
        }
        !self.ordered.contains(&(r, s)) && self.schedule.last_service().is_some_and(|last| {
            last.requester == r && last.skill == s && (last.finish - start).abs() <= EPS
        })
    }

    fn location_of(&self, r: RequesterId) -> Point {
        self.neighbors
            .iter()
            .find(|(id, _, _)| *id == r)
            .map_or(self.profile.location, |(_, l, _)| *l)
    }

    fn begin_iteration(&mut self) {
        self.proposer = DgsProposer::default();
        self.assignment = None;
    }

    fn step(&mut self, inbox: &[Message<DsrmMsg>], ctx: &mut StepContext<'_, DsrmMsg>) -> Result<(), DsrmError> {
        ctx.charge(inbox.len() as u64);
        for m in inbox {
            let AgentId::Requester(r) = m.from else { continue };
            match m.payload {
                DsrmMsg::Bid { skill, value } => {
                    self.received_bids.push((SlotId { requester: r, skill }, value))
                }
                DsrmMsg::Gs(GsMsg::Accept(s)) => self.proposer.on_accept(SlotId { requester: r, skill: s }),
                DsrmMsg::Gs(GsMsg::Reject(s)) => self.proposer.on_reject(SlotId { requester: r, skill: s }),
                DsrmMsg::Assignment { skill, workload, epsilon } => {
                    let rate = self.profile.skill(skill).map_or(1.0, |s| s.rate);
                    self.assignment = Some(Assignment {
                        requester: r,
                        location: self.location_of(r),
                        skill,
                        workload,
                        rate,
                        epsilon,
                    });
                }
                DsrmMsg::MinTime(v) => {
                    self.flood.absorb(v);
                }
                _ => {}
            }
        }
        if std::mem::take(&mut self.kicked) {
            match self.phase {
                Phase::Offer if self.proposer.matched().is_none() => {
                    self.proposer = DgsProposer::default();
                    for (r, loc, skills) in &self.neighbors {
                        let start = self.motion.start_for(self.clock.t, *loc);
                        for &s in skills {
                            let left = self.remaining[&s];
                            if left <= EPS || !self.has_room(*r, s, start) {
                                continue;
                            }
                            ctx.charge(2);
                            let rate = self.profile.skill(s).map_or(1.0, |x| x.rate);
                            ctx.send(
                                *r,
                                DsrmMsg::Proposal(Offer { sp: self.profile.id, skill: s, workload: left, start, rate }),
                            )?;
                        }
                    }
                }
                Phase::Flood => {
                    let finish = self.assignment.map_or(f64::INFINITY, |a| {
                        self.motion.start_for(self.clock.t, a.location) + a.rate * a.workload
                    });
                    ctx.charge(2);
                    self.flood = MinFlood::new(finish);
                }
                Phase::Commit => {
                    let t = self.flood.value();
                    if t.is_finite() {
                        if let Some(a) = self.assignment {
                            ctx.charge(4);
                            let (tuple, motion) = commit_partial(self.motion, &a, self.clock.t, t)?;
                            self.motion = motion;
                            if let Some(tuple) = tuple {
                                let left = self.remaining.entry(tuple.skill).or_default();
                                *left = (*left - tuple.workload).max(0.0);
                                if self.ordered.contains(&(tuple.requester, tuple.skill)) {
                                    self.schedule.push(tuple);
                                } else {
                                    self.schedule.push_merging(tuple);
                                }
                                ctx.send(a.requester, DsrmMsg::Commit(tuple))?;
                            }
                        }
                        self.clock.advance(t);
                    }
                }
                _ => {}
            }
        }
        if self.phase == Phase::Offer && !self.received_bids.is_empty() {
            let mut bids = std::mem::take(&mut self.received_bids);
            bids.retain(|(_, b)| *b > 0.0);
            ctx.charge_sort(bids.len());
            bids.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            self.proposer = DgsProposer::new(bids.into_iter().map(|(s, _)| s).collect());
        }
        if self.phase == Phase::Offer {
            if let Some(s) = self.proposer.propose() {
                ctx.charge(1);
                ctx.send(s.requester, DsrmMsg::Gs(GsMsg::Propose(s.skill)))?;
            }
        }
        if self.phase == Phase::Flood {
            if let Some(v) = self.flood.announcement() {
                ctx.broadcast(DsrmMsg::MinTime(v))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct RequesterAgent {
    profile: RequesterProfile,
    mode: BidMode,
    epsilon: f64,
    remaining: BTreeMap<SkillId, f64>,
    quota: BTreeMap<SkillId, usize>,
    predecessor: BTreeMap<SkillId, SkillId>,
    pieces: Vec<ServiceTuple>,
    clock: SimClock,
    phase: Phase,
    kicked: bool,
    pass_offers: Vec<Offer>,
    offered: BTreeMap<(SkillId, ProviderId), Offer>,
    slots: BTreeMap<SkillId, DgsSlot>,
    matched: BTreeMap<SkillId, Vec<Offer>>,
    assigned: bool,
    flood: MinFlood,
}

impl RequesterAgent {
    fn new(problem: &Problem, id: RequesterId, config: &DsrmConfig) -> Self {
        let profile = problem.requester(id).clone();
        let quota = profile
            .skills
            .iter()
            .map(|rs| {
                let n = problem.providers.iter().filter(|p| p.provides(rs.skill)).count();
                (rs.skill, (rs.team_size as usize).min(n))
            })
            .collect();
        let predecessor = profile
            .skill_ids()
            .filter_map(|s| problem.predecessor(id, s).map(|b| (s, b)))
            .collect();
        Self {
            remaining: profile.skills.iter().map(|s| (s.skill, s.workload)).collect(),
            profile,
            mode: config.bid_mode,
            epsilon: config.epsilon,
            quota,
            predecessor,
            pieces: Vec::new(),
            clock: SimClock::default(),
            phase: Phase::Idle,
            kicked: false,
            pass_offers: Vec::new(),
            offered: BTreeMap::new(),
            slots: BTreeMap::new(),
            matched: BTreeMap::new(),
            assigned: false,
            flood: MinFlood::new(f64::INFINITY),
        }
    }

    fn begin_iteration(&mut self) {
        self.matched.clear();
        self.slots.clear();
        self.offered.clear();
        self.assigned = false;
    }

    /// Remaining workload of `s` that may be scheduled from the current time on,
    /// given how much of its predecessor has already finished.
    fn eligible(&self, s: SkillId) -> f64 {
        let left = self.remaining.get(&s).copied().unwrap_or(0.0);
        let Some(&before) = self.predecessor.get(&s) else {
            return left;
        };
        let done: f64 = self
            .pieces
            .iter()
            .filter(|t| t.skill == before && t.finish <= self.clock.t + EPS)
            .map(|t| t.workload)
            .sum();
        let started: f64 = self.pieces.iter().filter(|t| t.skill == s).map(|t| t.workload).sum();
        left.min(done - started).max(0.0)
    }

    fn fold_pass(&mut self) {
        for (s, slot) in std::mem::take(&mut self.slots) {
            for p in slot.held {
                if let Some(o) = self.offered.get(&(s, p)) {
                    self.matched.entry(s).or_default().push(*o);
                }
            }
        }
    }

    fn place_bids(&mut self, ctx: &mut StepContext<'_, DsrmMsg>) -> Result<(), DsrmError> {
        let offers = std::mem::take(&mut self.pass_offers);
        for o in &offers {
            self.offered.insert((o.skill, o.sp), *o);
        }
        for rs in self.profile.skills.clone() {
            let mine: Vec<Offer> = offers.iter().filter(|o| o.skill == rs.skill).copied().collect();
            let base = self.matched.get(&rs.skill).cloned().unwrap_or_default();
            let residual = self.quota[&rs.skill].saturating_sub(base.len());
            let eligible = self.eligible(rs.skill);
            if mine.is_empty() || residual == 0 || eligible <= EPS {
                continue;
            }
            let bids: BTreeMap<ProviderId, f64> = match self.mode {
                BidMode::Simple => {
                    ctx.charge(3 * mine.len() as u64);
                    mine.iter().map(|o| (o.sp, bid_simple(&rs, eligible, o))).collect()
                }
                BidMode::Truncated => {
                    let k = (residual.min(mine.len()) + base.len()) as u64;
                    ctx.charge_sort(mine.len());
                    ctx.charge(k * k * 4 + mine.len() as u64);
                    bid_truncated(&rs, eligible, &base, &mine)
                }
            };
            let positive: BTreeMap<ProviderId, f64> =
                bids.into_iter().filter(|(_, b)| *b > 0.0).collect();
            for (&p, &value) in &positive {
                ctx.send(p, DsrmMsg::Bid { skill: rs.skill, value })?;
            }
            if !positive.is_empty() {
                self.slots.insert(rs.skill, DgsSlot::new(residual, positive));
            }
        }
        Ok(())
    }

    fn step(&mut self, inbox: &[Message<DsrmMsg>], ctx: &mut StepContext<'_, DsrmMsg>) -> Result<(), DsrmError> {
        ctx.charge(inbox.len() as u64);
        let mut proposals: BTreeMap<SkillId, Vec<ProviderId>> = BTreeMap::new();
        for m in inbox {
            match m.payload {
                DsrmMsg::Proposal(o) => self.pass_offers.push(o),
                DsrmMsg::Gs(GsMsg::Propose(s)) => {
                    if let AgentId::Provider(p) = m.from {
                        proposals.entry(s).or_default().push(p);
                    }
                }
                DsrmMsg::MinTime(v) => {
                    self.flood.absorb(v);
                }
                DsrmMsg::Commit(t) => {
                    let left = self.remaining.entry(t.skill).or_default();
                    *left = (*left - t.workload).max(0.0);
                    self.pieces.push(t);
                }
                _ => {}
            }
        }
        if !self.pass_offers.is_empty() {
            self.place_bids(ctx)?;
        }
        for (s, ps) in proposals {
            let resp = match self.slots.get_mut(&s) {
                Some(slot) => {
                    ctx.charge_sort(slot.held.len() + ps.len());
                    slot.receive(&ps)
                }
                None => SlotResponse { accepted: vec![], rejected: ps },
            };
            for p in resp.accepted {
                ctx.send(p, DsrmMsg::Gs(GsMsg::Accept(s)))?;
            }
            for p in resp.rejected {
                ctx.send(p, DsrmMsg::Gs(GsMsg::Reject(s)))?;
            }
        }
        if std::mem::take(&mut self.kicked) {
            match self.phase {
                Phase::Offer => self.fold_pass(),
                Phase::Assign => {
                    self.fold_pass();
                    for (s, team) in self.matched.clone() {
                        let eligible = self.eligible(s);
                        let epsilon = self.epsilon * self.profile.skill(s).map_or(0.0, |x| x.workload);
                        ctx.charge(2 * team.len() as u64);
                        for (p, t) in assign_providers(self.profile.id, eligible, &team) {
                            self.assigned = true;
                            ctx.send(p, DsrmMsg::Assignment { skill: s, workload: t.workload, epsilon })?;
                        }
                    }
                }
                Phase::Flood => self.flood = MinFlood::new(f64::INFINITY),
                Phase::Commit => {
                    let t = self.flood.value();
                    if t.is_finite() {
                        self.clock.advance(t);
                    }
                }
                Phase::Idle => {}
            }
        }
        if self.phase == Phase::Flood {
            if let Some(v) = self.flood.announcement() {
                ctx.broadcast(DsrmMsg::MinTime(v))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum DsrmAgent {
    Sp(Box<ProviderAgent>),
    Sr(Box<RequesterAgent>),
}

impl DsrmAgent {
    fn kick(&mut self, phase: Phase) {
        match self {
            DsrmAgent::Sp(a) => {
                a.phase = phase;
                a.kicked = true;
            }
            DsrmAgent::Sr(a) => {
                a.phase = phase;
                a.kicked = true;
            }
        }
    }

    fn begin_iteration(&mut self) {
        match self {
            DsrmAgent::Sp(a) => a.begin_iteration(),
            DsrmAgent::Sr(a) => a.begin_iteration(),
        }
    }
}

impl Agent for DsrmAgent {
    type Msg = DsrmMsg;
    type Error = DsrmError;

    fn id(&self) -> AgentId {
        match self {
            DsrmAgent::Sp(a) => a.profile.id.into(),
            DsrmAgent::Sr(a) => a.profile.id.into(),
        }
    }

    fn step(&mut self, inbox: &[Message<DsrmMsg>], ctx: &mut StepContext<'_, DsrmMsg>) -> Result<(), DsrmError> {
        match self {
            DsrmAgent::Sp(a) => a.step(inbox, ctx),
            DsrmAgent::Sr(a) => a.step(inbox, ctx),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DsrmOutcome {
    pub trace: Trace,
    pub solution: Solution,
    /// Outer iterations that committed work.
    pub iterations: usize,
    /// Largest requester clock after each committing iteration.
    pub clock: Vec<f64>,
}

fn committed(net: &Network<DsrmAgent>) -> Solution {
    Solution {
        schedules: net
            .agents()
            .iter()
            .filter_map(|a| match a {
                DsrmAgent::Sp(s) => Some((s.profile.id, s.schedule.clone())),
                DsrmAgent::Sr(_) => None,
            })
            .collect(),
    }
}

fn matched_count(net: &Network<DsrmAgent>) -> usize {
    net.agents()
        .iter()
        .filter(|a| matches!(a, DsrmAgent::Sp(s) if s.proposer.matched().is_some()))
        .count()
}

fn run_phase(net: &mut Network<DsrmAgent>, phase: Phase) -> Result<(), DsrmError> {
    for a in net.agents_mut() {
        a.kick(phase);
    }
    net.run_until_quiet(u64::MAX)?;
    Ok(())
}

pub fn run_dsrm(problem: &Problem, config: &DsrmConfig) -> Result<DsrmOutcome, DsrmError> {
    run_dsrm_scored(problem, config, |s| global_utility(problem, s))
}

/// Like [`run_dsrm`], with trace samples scored by `score`.
pub fn run_dsrm_scored(
    problem: &Problem,
    config: &DsrmConfig,
    score: impl Fn(&Solution) -> f64,
) -> Result<DsrmOutcome, DsrmError> {
    let agents = problem
        .providers
        .iter()
        .map(|p| DsrmAgent::Sp(Box::new(ProviderAgent::new(problem, p.id))))
        .chain(
            problem
                .requesters
                .iter()
                .map(|r| DsrmAgent::Sr(Box::new(RequesterAgent::new(problem, r.id, config)))),
        )
        .collect();
    let mut net = Network::new(build_graph(problem), agents)?;
    let cap = config.max_outer_iterations.unwrap_or_else(|| {
        10 * problem.providers.len().max(1)
            * problem.requesters.len().max(1)
            * problem.num_skills.max(1) as usize
    });
    let mut trace = Trace::default();
    trace.push(0, score(&Solution::empty(problem)));
    let mut iterations = 0;
    let mut clock = Vec::new();
    while iterations < cap {
        for a in net.agents_mut() {
            a.begin_iteration();
        }
        let mut matched = 0;
        loop {
            run_phase(&mut net, Phase::Offer)?;
            let now = matched_count(&net);
            if now == matched {
                break;
            }
            matched = now;
        }
        run_phase(&mut net, Phase::Assign)?;
        let any = net
            .agents()
            .iter()
            .any(|a| matches!(a, DsrmAgent::Sr(r) if r.assigned));
        if !any {
            break;
        }
        run_phase(&mut net, Phase::Flood)?;
        run_phase(&mut net, Phase::Commit)?;
        iterations += 1;
        trace.push(net.global_nclo(), score(&committed(&net)));
        clock.push(
            net.agents()
                .iter()
                .filter_map(|a| match a {
                    DsrmAgent::Sr(r) => Some(r.clock.t),
                    DsrmAgent::Sp(_) => None,
                })
                .fold(0.0, f64::max),
        );
    }
    Ok(DsrmOutcome { trace, solution: committed(&net), iterations, clock })
}
